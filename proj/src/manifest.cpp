#include "fastexec/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fastexec/errors.hpp"

namespace fastexec {

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("digest_file: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

void RunManifest::write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["timings_ms"] = timings_ms;
    j["notes"] = notes;
    std::ofstream out(path);
    if (!out) throw DataError("RunManifest: cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace fastexec
