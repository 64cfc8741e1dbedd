#pragma once

#include <map>
#include <string>

namespace rap {

// Every emitted artifact gets a <artifact>.provenance.json sidecar recording
// the tool version, the effective configuration, input content hashes, and
// timing.
struct Provenance {
    std::string command;
    std::map<std::string, std::string> config;         // effective key -> value
    std::map<std::string, std::string> input_hashes;   // label -> sha256 of the input file
    std::map<std::string, std::string> extra;          // method name, warnings, ...
    double seconds = 0.0;
};

void write_provenance(const Provenance& p, const std::string& artifact_path);

}  // namespace rap
