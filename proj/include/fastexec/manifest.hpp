#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fastexec {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit digest, hex-encoded. Used for config content hashes.
std::string fnv1a_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

/// Reproducibility sidecar written by every CLI command. Reports themselves
/// carry no timestamps so reruns are byte-identical; wall-clock timings live
/// here instead.
struct RunManifest {
    std::string command;
    std::string config_digest;
    uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, double> timings_ms;
    std::map<std::string, std::string> notes;

    void write(const std::string& path) const;
};

}  // namespace fastexec
