#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <string.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <filesystem>

#include "testforge/errors.hpp"
#include "testforge/runner.hpp"

namespace testforge {

namespace {

// Written by the child when execvp itself fails, so callers can tell a
// missing tool apart from a program that exited 127 on its own.
constexpr const char* kExecFailedMarker = "__testforge_exec_failed__: ";

struct Pipe {
    int read_fd = -1;
    int write_fd = -1;
    Pipe() {
        int fds[2];
        if (pipe(fds) != 0) throw IoError(std::string("pipe() failed: ") + strerror(errno));
        read_fd = fds[0];
        write_fd = fds[1];
    }
    void close_read() {
        if (read_fd >= 0) { close(read_fd); read_fd = -1; }
    }
    void close_write() {
        if (write_fd >= 0) { close(write_fd); write_fd = -1; }
    }
    ~Pipe() {
        close_read();
        close_write();
    }
};

void ignore_sigpipe_once() {
    static std::atomic<bool> done{false};
    bool expected = false;
    if (done.compare_exchange_strong(expected, true)) signal(SIGPIPE, SIG_IGN);
}

}  // namespace

std::string RunResult::describe() const {
    switch (status) {
        case Status::TimedOut:
            return "timed out";
        case Status::Signaled: {
            const char* name = strsignal(term_signal);
            return "terminated by signal " + std::to_string(term_signal) +
                   (name ? std::string(" (") + name + ")" : "");
        }
        case Status::Exited:
            return "exited with code " + std::to_string(exit_code);
    }
    return "unknown";
}

RunResult run_process(const std::vector<std::string>& argv, const std::string& workdir,
                      std::string_view stdin_bytes, const ProcessLimits& limits) {
    if (argv.empty()) throw IoError("run_process: empty argv");
    ignore_sigpipe_once();

    Pipe in, out, err;
    auto start = std::chrono::steady_clock::now();

    pid_t pid = fork();
    if (pid < 0) throw IoError(std::string("fork() failed: ") + strerror(errno));
    if (pid == 0) {
        // child
        setpgid(0, 0);
        if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(126);
        struct rlimit core{0, 0};
        setrlimit(RLIMIT_CORE, &core);
        if (limits.memory_bytes > 0) {
            struct rlimit mem{limits.memory_bytes, limits.memory_bytes};
            setrlimit(RLIMIT_AS, &mem);
        }
        dup2(in.read_fd, STDIN_FILENO);
        dup2(out.write_fd, STDOUT_FILENO);
        dup2(err.write_fd, STDERR_FILENO);
        in.close_read(); in.close_write();
        out.close_read(); out.close_write();
        err.close_read(); err.close_write();

        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        std::string msg = std::string(kExecFailedMarker) + strerror(errno) + "\n";
        ssize_t ignored = write(STDERR_FILENO, msg.data(), msg.size());
        (void)ignored;
        _exit(127);
    }

    // parent
    setpgid(pid, pid);  // belt-and-braces against the child racing past exec
    in.close_read();
    out.close_write();
    err.close_write();

    RunResult result;
    size_t stdin_pos = 0;
    if (stdin_bytes.empty()) in.close_write();

    bool killed_for_timeout = false;
    bool killed = false;
    auto deadline = start + limits.wall_timeout;

    auto kill_group = [&] {
        if (!killed) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            killed = true;
        }
    };

    char buf[65536];
    while (out.read_fd >= 0 || err.read_fd >= 0 || in.write_fd >= 0) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline && !killed) {
            killed_for_timeout = true;
            kill_group();
        }
        int wait_ms = 50;
        if (!killed) {
            auto remaining =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
            wait_ms = static_cast<int>(std::min<long long>(std::max<long long>(remaining, 1), 50));
        }

        struct pollfd fds[3];
        nfds_t nfds = 0;
        int out_idx = -1, err_idx = -1, in_idx = -1;
        if (out.read_fd >= 0) { fds[nfds] = {out.read_fd, POLLIN, 0}; out_idx = nfds++; }
        if (err.read_fd >= 0) { fds[nfds] = {err.read_fd, POLLIN, 0}; err_idx = nfds++; }
        if (in.write_fd >= 0) { fds[nfds] = {in.write_fd, POLLOUT, 0}; in_idx = nfds++; }

        int rc = poll(fds, nfds, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            kill_group();
            break;
        }
        if (rc == 0) continue;

        if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP | POLLERR))) {
            ssize_t n = read(out.read_fd, buf, sizeof(buf));
            if (n > 0) {
                size_t room = limits.output_cap_bytes > result.stdout_bytes.size()
                                  ? limits.output_cap_bytes - result.stdout_bytes.size()
                                  : 0;
                result.stdout_bytes.append(buf, std::min<size_t>(n, room));
                if (static_cast<size_t>(n) > room) {
                    result.output_truncated = true;
                    kill_group();
                }
            } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
                out.close_read();
            }
        }
        if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP | POLLERR))) {
            ssize_t n = read(err.read_fd, buf, sizeof(buf));
            if (n > 0) {
                if (result.stderr_bytes.size() < limits.output_cap_bytes)
                    result.stderr_bytes.append(
                        buf, std::min<size_t>(n, limits.output_cap_bytes - result.stderr_bytes.size()));
            } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
                err.close_read();
            }
        }
        if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLHUP | POLLERR))) {
            if (fds[in_idx].revents & (POLLHUP | POLLERR)) {
                in.close_write();
            } else {
                ssize_t n = write(in.write_fd, stdin_bytes.data() + stdin_pos,
                                  stdin_bytes.size() - stdin_pos);
                if (n > 0) stdin_pos += static_cast<size_t>(n);
                if (n < 0 && errno != EINTR && errno != EAGAIN) in.close_write();
                if (stdin_pos >= stdin_bytes.size()) in.close_write();
            }
        }
    }

    // The child may have closed its fds without exiting; keep the deadline.
    int status = 0;
    for (;;) {
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            if (!killed) killed_for_timeout = true;
            kill_group();
            while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
            break;
        }
        usleep(2000);
    }
    // reap any forked grandchildren in the group so nothing lingers
    kill(-pid, SIGKILL);

    result.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    if (killed_for_timeout) {
        result.status = RunResult::Status::TimedOut;
    } else if (WIFSIGNALED(status)) {
        result.status = RunResult::Status::Signaled;
        result.term_signal = WTERMSIG(status);
    } else {
        result.status = RunResult::Status::Exited;
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    if (result.status == RunResult::Status::Exited && result.exit_code == 127 &&
        result.stderr_bytes.find(kExecFailedMarker) != std::string::npos) {
        throw ToolchainMissing("cannot execute '" + argv[0] + "': " +
                               result.stderr_bytes.substr(result.stderr_bytes.find(kExecFailedMarker) +
                                                          strlen(kExecFailedMarker)));
    }
    return result;
}

}  // namespace testforge
