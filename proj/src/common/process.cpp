#include "cexrepair/common/process.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace cexrepair {

namespace {

std::vector<std::string> filtered_environment(const std::vector<std::string> &unset_env)
{
    std::vector<std::string> out;
    for (char **e = environ; e && *e; ++e) {
        std::string kv(*e);
        auto eq = kv.find('=');
        std::string key = kv.substr(0, eq);
        bool drop = false;
        for (auto &u : unset_env)
            drop |= key == u;
        if (!drop)
            out.push_back(kv);
    }
    return out;
}

} // namespace

std::optional<std::filesystem::path> find_executable(const std::string &name)
{
    namespace fs = std::filesystem;
    if (name.empty())
        return std::nullopt;
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0 && !fs::is_directory(name))
            return fs::absolute(name);
        return std::nullopt;
    }
    const char *path = std::getenv("PATH");
    std::string p = path ? path : "/usr/bin:/bin";
    std::size_t start = 0;
    while (start <= p.size()) {
        auto c = p.find(':', start);
        std::string dir = p.substr(start, c == std::string::npos ? std::string::npos : c - start);
        if (!dir.empty()) {
            fs::path cand = fs::path(dir) / name;
            if (::access(cand.c_str(), X_OK) == 0 && !fs::is_directory(cand))
                return cand;
        }
        if (c == std::string::npos)
            break;
        start = c + 1;
    }
    return std::nullopt;
}

ProcessResult run_process(const std::vector<std::string> &argv, double timeout_s,
                          const std::optional<std::filesystem::path> &cwd, const std::vector<std::string> &unset_env)
{
    ProcessResult res;
    if (argv.empty()) {
        res.spawn_error = "empty command line";
        return res;
    }
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
        res.spawn_error = std::strerror(errno);
        return res;
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, fds[1], 1);
    posix_spawn_file_actions_adddup2(&fa, fds[1], 2);
    posix_spawn_file_actions_addopen(&fa, 0, "/dev/null", O_RDONLY, 0);
    if (cwd)
        posix_spawn_file_actions_addchdir_np(&fa, cwd->c_str());
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    std::vector<char *> args;
    for (auto &a : argv)
        args.push_back(const_cast<char *>(a.c_str()));
    args.push_back(nullptr);
    auto env_strings = filtered_environment(unset_env);
    std::vector<char *> envp;
    for (auto &e : env_strings)
        envp.push_back(e.data());
    envp.push_back(nullptr);

    auto t0 = std::chrono::steady_clock::now();
    pid_t pid = 0;
    int rc = posix_spawnp(&pid, argv[0].c_str(), &fa, &attr, args.data(), envp.data());
    posix_spawn_file_actions_destroy(&fa);
    posix_spawnattr_destroy(&attr);
    ::close(fds[1]);
    if (rc != 0) {
        ::close(fds[0]);
        res.spawn_error = std::strerror(rc);
        return res;
    }
    res.spawned = true;

    auto deadline = t0 + std::chrono::duration<double>(timeout_s);
    char buf[8192];
    bool open = true;
    while (open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            res.timed_out = true;
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            break;
        }
        int ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
        pollfd p{fds[0], POLLIN, 0};
        int pr = ::poll(&p, 1, std::min(ms, 200));
        if (pr < 0 && errno != EINTR)
            break;
        if (pr > 0) {
            ssize_t n = ::read(fds[0], buf, sizeof buf);
            if (n > 0)
                res.output.append(buf, static_cast<std::size_t>(n));
            else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN))
                open = false;
        }
    }
    ::close(fds[0]);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!res.timed_out) {
        // Reap any leftover group members that kept the pipe open.
        ::kill(-pid, SIGKILL);
    }
    if (WIFEXITED(status))
        res.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        res.exit_code = 128 + WTERMSIG(status);
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace cexrepair
