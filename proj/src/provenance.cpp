#include "rap/provenance.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "rap/common.hpp"

namespace rap {

void write_provenance(const Provenance& p, const std::string& artifact_path) {
    nlohmann::json doc;
    doc["tool"] = "rap";
    doc["version"] = kVersion;
    doc["command"] = p.command;
    doc["config"] = p.config;
    doc["inputs"] = p.input_hashes;
    if (!p.extra.empty()) doc["extra"] = p.extra;
    doc["seconds"] = p.seconds;
    std::string path = artifact_path + ".provenance.json";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << doc.dump(2) << "\n";
    if (!f) throw io_error("write failed: " + path);
}

}  // namespace rap
