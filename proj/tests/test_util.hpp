#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "gridmfg/config.hpp"

namespace gridmfg_test {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string scenario_path(const std::string& name) {
    return std::string(GRIDMFG_SCENARIO_DIR) + "/" + name;
}

inline gridmfg::ScenarioConfig load_scenario(const std::string& name) {
    return gridmfg::parse_scenario(read_file(scenario_path(name)));
}

} // namespace gridmfg_test
