#pragma once

#include <string>
#include <vector>

#include "elastoray/xray.hpp"

namespace elastoray::app {

constexpr const char* kVersion = "0.1.0";

// Runs the CLI given argv-style arguments (without the program name).
// Returns 0 on success, 1 on usage errors, 2 on computation or I/O errors.
// Factored out of main() so pipelines are drivable from tests.
int run(const std::vector<std::string>& args);

// Fan persistence: the fan file stores the embedded config, the fan spec, and
// the kept launches; loading re-traces the rays (deterministic).
void save_fan(const RayFan& fan, const std::string& config_text, const std::string& path);
struct LoadedFan {
    ModelConfig config;
    RayFan fan;
};
LoadedFan load_fan(const std::string& path);

// RFC-4180-style CSV with a header row, '.' decimal separator, and '\n' line
// ends; doubles printed with %.17g so identical values give identical bytes.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::vector<TransformSample> read_samples_csv(const std::string& path);

uint64_t fnv1a64(const std::string& bytes);

}  // namespace elastoray::app
