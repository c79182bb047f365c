#pragma once

#include <vector>

namespace fuzzeval {

struct ResourceSample {
    double t_s = 0.0;          // seconds since trial start
    double cpu_percent = 0.0;  // whole process tree; 100 = one busy core
    double rss_mb = 0.0;
};

// Per-trial resource history: periodic samples plus cumulative disk
// counters taken at trial end.
struct ResourceTrace {
    std::vector<ResourceSample> samples;
    double disk_read_mb = 0.0;
    double disk_write_mb = 0.0;
};

}  // namespace fuzzeval
