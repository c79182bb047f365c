#include "fuzzeval/proc.hpp"

#include <dirent.h>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/metrics.hpp"
#include "fuzzeval/util.hpp"

namespace fuzzeval {

namespace {

double monotonic_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void sleep_ms(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

[[noreturn]] void exec_in_child(const ExecSpec& spec, int out_fd, int err_fd) {
    setpgid(0, 0);
    if (spec.address_space_mb > 0) {
        rlimit lim{};
        lim.rlim_cur = lim.rlim_max = static_cast<rlim_t>(spec.address_space_mb) * 1024 * 1024;
        setrlimit(RLIMIT_AS, &lim);
    }
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    for (int fd = 3; fd < 256; ++fd) close(fd);
    if (!spec.cwd.empty() && chdir(spec.cwd.c_str()) != 0) {
        dprintf(STDERR_FILENO, "chdir %s: %s\n", spec.cwd.c_str(), strerror(errno));
        _exit(127);
    }
    for (const auto& [k, v] : spec.env) setenv(k.c_str(), v.c_str(), 1);
    if (!spec.argv.empty()) {
        std::vector<char*> argv;
        for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
    } else {
        execl("/bin/sh", "sh", "-c", spec.shell_command.c_str(), static_cast<char*>(nullptr));
    }
    dprintf(STDERR_FILENO, "exec failed: %s\n", strerror(errno));
    _exit(127);
}

int open_sink(const std::filesystem::path& path) {
    int fd = open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0)
        throw LaunchFailure("cannot open " + path.string() + ": " + strerror(errno));
    return fd;
}

void set_nonblocking(int fd) {
    if (fd >= 0) fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) | O_NONBLOCK);
}

struct ProcStat {
    pid_t pid = 0;
    pid_t ppid = 0;
    pid_t pgrp = 0;
    unsigned long long cpu_ticks = 0;  // utime + stime
};

std::optional<ProcStat> read_proc_stat(pid_t pid) {
    std::string text;
    try {
        text = util::read_file("/proc/" + std::to_string(pid) + "/stat");
    } catch (const std::exception&) {
        return std::nullopt;
    }
    auto close_paren = text.rfind(')');
    if (close_paren == std::string::npos) return std::nullopt;
    auto rest = util::split(util::trim(text.substr(close_paren + 1)), ' ');
    // After the comm field: state ppid pgrp ... utime is the 12th token
    // here (field 14 of the full line), stime the 13th.
    if (rest.size() < 13) return std::nullopt;
    ProcStat st;
    st.pid = pid;
    st.ppid = static_cast<pid_t>(std::stol(rest[1]));
    st.pgrp = static_cast<pid_t>(std::stol(rest[2]));
    st.cpu_ticks = std::stoull(rest[11]) + std::stoull(rest[12]);
    return st;
}

double read_rss_kb(pid_t pid) {
    std::string text;
    try {
        text = util::read_file("/proc/" + std::to_string(pid) + "/statm");
    } catch (const std::exception&) {
        return 0.0;
    }
    auto fields = util::split(util::trim(text), ' ');
    if (fields.size() < 2) return 0.0;
    static const long page_kb = sysconf(_SC_PAGESIZE) / 1024;
    return static_cast<double>(std::stoll(fields[1])) * static_cast<double>(page_kb);
}

std::vector<ProcStat> scan_proc() {
    std::vector<ProcStat> all;
    DIR* dir = opendir("/proc");
    if (!dir) return all;
    while (dirent* ent = readdir(dir)) {
        const char* name = ent->d_name;
        if (!std::isdigit(static_cast<unsigned char>(name[0]))) continue;
        if (auto st = read_proc_stat(static_cast<pid_t>(std::atol(name)))) all.push_back(*st);
    }
    closedir(dir);
    return all;
}

}  // namespace

std::vector<pid_t> process_tree(pid_t root) {
    auto all = scan_proc();
    std::map<pid_t, std::vector<pid_t>> children;
    std::set<pid_t> alive;
    for (const auto& st : all) {
        children[st.ppid].push_back(st.pid);
        alive.insert(st.pid);
    }
    std::set<pid_t> tree;
    std::vector<pid_t> queue;
    if (alive.contains(root)) {
        tree.insert(root);
        queue.push_back(root);
    }
    while (!queue.empty()) {
        pid_t cur = queue.back();
        queue.pop_back();
        for (pid_t kid : children[cur])
            if (tree.insert(kid).second) queue.push_back(kid);
    }
    for (const auto& st : all)
        if (st.pgrp == root) tree.insert(st.pid);
    return {tree.begin(), tree.end()};
}

ChildProcess ChildProcess::spawn(const ExecSpec& spec) {
    if (spec.argv.empty() && spec.shell_command.empty())
        throw LaunchFailure("spawn: no command given");

    int out_pipe[2] = {-1, -1};
    int err_pipe[2] = {-1, -1};
    int out_fd;
    int err_fd;
    if (spec.stdout_path.empty()) {
        if (pipe(out_pipe) != 0) throw LaunchFailure(std::string("pipe: ") + strerror(errno));
        out_fd = out_pipe[1];
    } else {
        out_fd = open_sink(spec.stdout_path);
    }
    if (spec.stderr_path.empty()) {
        if (pipe(err_pipe) != 0) {
            close(out_fd);
            if (out_pipe[0] >= 0) close(out_pipe[0]);
            throw LaunchFailure(std::string("pipe: ") + strerror(errno));
        }
        err_fd = err_pipe[1];
    } else {
        err_fd = open_sink(spec.stderr_path);
    }

    pid_t pid = fork();
    if (pid < 0) {
        close(out_fd);
        close(err_fd);
        if (out_pipe[0] >= 0) close(out_pipe[0]);
        if (err_pipe[0] >= 0) close(err_pipe[0]);
        throw LaunchFailure(std::string("fork: ") + strerror(errno));
    }
    if (pid == 0) {
        if (out_pipe[0] >= 0) close(out_pipe[0]);
        if (err_pipe[0] >= 0) close(err_pipe[0]);
        exec_in_child(spec, out_fd, err_fd);
    }

    // Both sides race to move the child into its own group; either works.
    setpgid(pid, pid);
    close(out_fd);
    close(err_fd);

    ChildProcess child;
    child.pid_ = pid;
    child.out_fd_ = out_pipe[0];
    child.err_fd_ = err_pipe[0];
    set_nonblocking(child.out_fd_);
    set_nonblocking(child.err_fd_);
    child.capture_limit_ = spec.capture_limit;
    child.started_monotonic_ = monotonic_s();
    return child;
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept { *this = std::move(other); }

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
    if (this == &other) return *this;
    pid_ = other.pid_;
    out_fd_ = other.out_fd_;
    err_fd_ = other.err_fd_;
    capture_limit_ = other.capture_limit_;
    started_monotonic_ = other.started_monotonic_;
    reaped_ = other.reaped_;
    killed_on_timeout_ = other.killed_on_timeout_;
    result_ = std::move(other.result_);
    other.pid_ = -1;
    other.out_fd_ = -1;
    other.err_fd_ = -1;
    other.reaped_ = true;
    return *this;
}

ChildProcess::~ChildProcess() {
    if (pid_ < 0) return;
    if (!reaped_) {
        kill_tree();
        reap_if_exited(true);
    }
    if (out_fd_ >= 0) close(out_fd_);
    if (err_fd_ >= 0) close(err_fd_);
}

void ChildProcess::drain_pipes(int wait_ms) {
    pollfd fds[2];
    nfds_t n = 0;
    if (out_fd_ >= 0) fds[n++] = {out_fd_, POLLIN, 0};
    if (err_fd_ >= 0) fds[n++] = {err_fd_, POLLIN, 0};
    if (n == 0) {
        if (wait_ms > 0) sleep_ms(wait_ms);
        return;
    }
    if (poll(fds, n, wait_ms) <= 0) return;

    char buf[65536];
    for (nfds_t i = 0; i < n; ++i) {
        if (!(fds[i].revents & (POLLIN | POLLHUP))) continue;
        bool is_out = fds[i].fd == out_fd_;
        std::string& sink = is_out ? result_.out : result_.err;
        while (true) {
            ssize_t got = read(fds[i].fd, buf, sizeof buf);
            if (got > 0) {
                std::size_t room =
                    capture_limit_ > sink.size() ? capture_limit_ - sink.size() : 0;
                sink.append(buf, std::min(static_cast<std::size_t>(got), room));
                continue;
            }
            if (got == 0) {
                close(fds[i].fd);
                (is_out ? out_fd_ : err_fd_) = -1;
            }
            break;  // EOF, EAGAIN or error
        }
    }
}

void ChildProcess::reap_if_exited(bool block) {
    if (reaped_) return;
    rusage ru{};
    int status = 0;
    pid_t got = wait4(pid_, &status, block ? 0 : WNOHANG, &ru);
    if (got != pid_) return;
    reaped_ = true;
    result_.wall_s = monotonic_s() - started_monotonic_;
    if (WIFEXITED(status)) result_.exit_code = WEXITSTATUS(status);
    if (WIFSIGNALED(status)) result_.term_signal = WTERMSIG(status);
    result_.max_rss_mb = static_cast<double>(ru.ru_maxrss) / 1024.0;
    result_.disk_read_mb = static_cast<double>(ru.ru_inblock) * 512.0 / 1048576.0;
    result_.disk_write_mb = static_cast<double>(ru.ru_oublock) * 512.0 / 1048576.0;
}

bool ChildProcess::running() {
    if (reaped_) return false;
    drain_pipes(0);
    reap_if_exited(false);
    return !reaped_;
}

void ChildProcess::kill_tree() {
    if (pid_ < 0) return;
    kill(-pid_, SIGKILL);
    kill(pid_, SIGKILL);
}

ExecResult ChildProcess::finish(double timeout_s) {
    while (!reaped_) {
        drain_pipes(50);
        reap_if_exited(false);
        if (reaped_) break;
        if (timeout_s > 0.0 && monotonic_s() - started_monotonic_ >= timeout_s) {
            killed_on_timeout_ = true;
            kill_tree();
            reap_if_exited(true);
        }
    }
    // Leftover pipe data, including output from group members that outlived
    // the direct child briefly; bounded so a stray writer cannot hold us.
    for (int i = 0; i < 20 && (out_fd_ >= 0 || err_fd_ >= 0); ++i) drain_pipes(10);
    result_.timed_out = killed_on_timeout_;
    return result_;
}

ExecResult run_process(const ExecSpec& spec) {
    auto child = ChildProcess::spawn(spec);
    return child.finish(spec.timeout_s);
}

MonitorResult monitor_process(ChildProcess& child, const MonitorOptions& opts) {
    MonitorResult res;
    const double t0 = monotonic_s();
    const double ticks_per_s = static_cast<double>(sysconf(_SC_CLK_TCK));

    auto tree_usage = [&child](unsigned long long& ticks, double& rss_kb) {
        ticks = 0;
        rss_kb = 0.0;
        for (pid_t pid : process_tree(child.pid())) {
            if (auto st = read_proc_stat(pid)) ticks += st->cpu_ticks;
            rss_kb += read_rss_kb(pid);
        }
    };

    unsigned long long prev_ticks;
    double rss_kb_unused;
    tree_usage(prev_ticks, rss_kb_unused);
    double prev_t = t0;
    double next_sample = t0 + opts.interval_s;

    while (child.running()) {
        double now = monotonic_s();
        if (opts.max_duration_s > 0.0 && now - t0 >= opts.max_duration_s) break;
        if (now < next_sample) {
            int ms = static_cast<int>((next_sample - now) * 1000.0);
            sleep_ms(std::clamp(ms, 1, 50));
            continue;
        }
        unsigned long long ticks;
        double rss_kb;
        tree_usage(ticks, rss_kb);
        double dt = now - prev_t;
        double cpu = 0.0;
        // Ticks of processes that died between samples vanish from the sum,
        // so the delta can dip below zero; clamp.
        if (dt > 0.0 && ticks >= prev_ticks)
            cpu = 100.0 * static_cast<double>(ticks - prev_ticks) / ticks_per_s / dt;
        res.trace.samples.push_back({now - t0, cpu, rss_kb / 1024.0});
        prev_ticks = ticks;
        prev_t = now;
        next_sample += opts.interval_s;
        if (next_sample <= now) next_sample = now + opts.interval_s;
    }

    if (res.trace.samples.size() >= 3) {
        auto summary = metrics::overhead_summary(res.trace);
        res.low_cpu_warning = summary.cpu_util_avg < opts.low_cpu_threshold;
    }
    return res;
}

}  // namespace fuzzeval
