#ifndef GPSSM_TRACE_IO_HPP
#define GPSSM_TRACE_IO_HPP

#include <optional>
#include <string>

#include "gpssm/mcmc.hpp"
#include "gpssm/pipeline.hpp"

namespace gpssm {

// Trace persistence: one CSV row per retained sample (named parameter
// columns followed by every latent coordinate) plus a JSON sidecar with
// the seed, chain configuration, layout and acceptance rates. The
// decomposition components of a station pipeline ride along in the
// sidecar so predictions can be shifted back to the raw scale.
void write_trace_files(const Trace& trace, const std::string& csv_path,
                       const std::string& meta_path,
                       const DecompositionComponents* components = nullptr);

struct TraceBundle {
    Trace trace;
    std::optional<DecompositionComponents> components;
};

TraceBundle read_trace_files(const std::string& csv_path, const std::string& meta_path);

}  // namespace gpssm

#endif
