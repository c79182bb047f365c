#pragma once

#include <sys/types.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fuzzeval/resource.hpp"

namespace fuzzeval {

struct ExecSpec {
    // Direct argv when nonempty, otherwise `shell_command` via /bin/sh -c.
    std::vector<std::string> argv;
    std::string shell_command;
    std::filesystem::path cwd;
    std::map<std::string, std::string> env;  // overlaid on the inherited env
    double timeout_s = 0.0;                  // 0: no limit
    std::int64_t address_space_mb = 0;       // RLIMIT_AS; 0: unlimited
    // Streams go to these files when set, else into ExecResult up to
    // capture_limit bytes each.
    std::filesystem::path stdout_path;
    std::filesystem::path stderr_path;
    std::size_t capture_limit = 1 << 20;
};

struct ExecResult {
    int exit_code = 0;
    int term_signal = 0;  // 0 when the process exited normally
    bool timed_out = false;
    double wall_s = 0.0;
    std::string out;
    std::string err;
    // From rusage of the reaped child, which folds in the descendants it
    // waited for itself.
    double max_rss_mb = 0.0;
    double disk_read_mb = 0.0;
    double disk_write_mb = 0.0;
};

// A spawned child in its own process group. Killing tears down the whole
// group; the destructor does so if the child was never reaped.
class ChildProcess {
  public:
    static ChildProcess spawn(const ExecSpec& spec);  // throws LaunchFailure

    ChildProcess(ChildProcess&& other) noexcept;
    ChildProcess& operator=(ChildProcess&&) noexcept;
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;
    ~ChildProcess();

    pid_t pid() const { return pid_; }
    // True while the child is alive. Drains capture pipes as a side effect
    // so the child never blocks on a full pipe.
    bool running();
    void kill_tree();
    // Blocks until exit, killing the group once `timeout_s` (0 = none, from
    // spawn time) elapses. Idempotent after the first return.
    ExecResult finish(double timeout_s);

  private:
    ChildProcess() = default;
    void drain_pipes(int wait_ms);
    void reap_if_exited(bool block);

    pid_t pid_ = -1;
    int out_fd_ = -1;
    int err_fd_ = -1;
    std::size_t capture_limit_ = 0;
    double started_monotonic_ = 0.0;
    bool reaped_ = false;
    bool killed_on_timeout_ = false;
    ExecResult result_;
};

ExecResult run_process(const ExecSpec& spec);

struct MonitorOptions {
    double interval_s = 1.0;
    double max_duration_s = 0.0;       // 0: until the child exits
    double low_cpu_threshold = 80.0;   // percent of one core
};

struct MonitorResult {
    ResourceTrace trace;
    // Time-weighted CPU average stayed under the threshold (needs at least
    // three samples to count as sustained).
    bool low_cpu_warning = false;
};

// Samples the child's whole process tree (ppid descendants plus process
// group members) at the given interval until the child exits or
// max_duration_s elapses. The caller still owns termination and finish().
MonitorResult monitor_process(ChildProcess& child, const MonitorOptions& opts);

// Pids currently in the tree rooted at `root`: ppid descendants unioned
// with the process group.
std::vector<pid_t> process_tree(pid_t root);

}  // namespace fuzzeval
