#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

namespace testing {

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs the descforge CLI inside `cwd` with a shell-joined argument string.
/// `env` is prepended verbatim (e.g. "DESCFORGE_THREADS=3").
inline CliRun run_cli(const std::filesystem::path& cwd, const std::string& args, const std::string& env = {})
{
    const auto out_path = cwd / ".cli_stdout", err_path = cwd / ".cli_stderr";
    const std::string command = "cd '" + cwd.string() + "' && " + env + (env.empty() ? "" : " ") + "'" + DESCFORGE_CLI + "' " + args +
                                " >'" + out_path.string() + "' 2>'" + err_path.string() + "'";
    const int status = std::system(command.c_str());
    CliRun run;
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    run.out = slurp(out_path);
    run.err = slurp(err_path);
    std::filesystem::remove(out_path);
    std::filesystem::remove(err_path);
    return run;
}

} // namespace testing
