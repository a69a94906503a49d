#pragma once

#include "tracecast/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tracecast {

/**
 * Self-describing model checkpoint.
 *
 * The descriptor is an opaque string (JSON in practice) that the owning model
 * uses to rebuild its architecture; it is stored verbatim so that a
 * save/load/save cycle reproduces the file byte for byte.
 */
struct Checkpoint {
    std::uint32_t format_version = 1;
    std::uint64_t seed = 0;
    std::string descriptor;
    std::vector<std::pair<std::string, Tensor>> tensors;

    /// Find a tensor by name; throws DataError when absent.
    const Tensor& tensor(const std::string& name) const;
    bool has_tensor(const std::string& name) const;
};

/// Serialize to a little-endian binary file. Throws DataError on I/O failure.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Parse a file written by save_checkpoint. Throws DataError on a missing
/// file, bad magic, unsupported version or truncated payload.
Checkpoint load_checkpoint(const std::string& path);

} // namespace tracecast
