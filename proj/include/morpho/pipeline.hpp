/*
 * morphoscope — deformation-based morphometry toolkit
 *
 * Copyright 2026 the morphoscope authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MORPHO_PIPELINE_HPP
#define MORPHO_PIPELINE_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "morpho/registration.hpp"
#include "morpho/volume.hpp"

namespace morpho {

constexpr const char* kVersion = "0.1.0";

inline nlohmann::json to_json(const RegistrationConfig& cfg) {
    return {{"lncc_window", cfg.lncc_window},
            {"lambda2", cfg.lambda2},
            {"lambda3", cfg.lambda3},
            {"pyramid_levels", cfg.pyramid_levels},
            {"iters_per_level", cfg.iters_per_level},
            {"step_size", cfg.step_size},
            {"smooth_update_sigma", cfg.smooth_update_sigma},
            {"convergence_tol", cfg.convergence_tol}};
}

inline RegistrationConfig registration_config_from_json(const nlohmann::json& j) {
    RegistrationConfig cfg;
    if (j.contains("lncc_window")) cfg.lncc_window = j.at("lncc_window").get<int>();
    if (j.contains("lambda2")) cfg.lambda2 = j.at("lambda2").get<double>();
    if (j.contains("lambda3")) cfg.lambda3 = j.at("lambda3").get<double>();
    if (j.contains("pyramid_levels")) cfg.pyramid_levels = j.at("pyramid_levels").get<int>();
    if (j.contains("iters_per_level")) cfg.iters_per_level = j.at("iters_per_level").get<int>();
    if (j.contains("step_size")) cfg.step_size = j.at("step_size").get<double>();
    if (j.contains("smooth_update_sigma"))
        cfg.smooth_update_sigma = j.at("smooth_update_sigma").get<double>();
    if (j.contains("convergence_tol")) cfg.convergence_tol = j.at("convergence_tol").get<double>();
    cfg.validate();
    return cfg;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path + ": cannot open for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(path + ": invalid JSON: " + e.what());
    }
    return j;
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Stages write a manifest next to their outputs: inputs, effective config
// (hashed over the canonical serialization, so the hash changes iff a field
// changes) and the library version. Content is deterministic.
inline void write_manifest(const std::string& path, const std::string& stage,
                           const std::vector<std::string>& inputs,
                           const nlohmann::json& effective_config) {
    nlohmann::json manifest;
    manifest["stage"] = stage;
    manifest["inputs"] = inputs;
    manifest["config"] = effective_config;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(effective_config.dump())));
    manifest["config_hash"] = hash;
    manifest["version"] = kVersion;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << manifest.dump(2) << '\n';
}

// Distribute n independent jobs over a bounded worker pool. Workers pull
// indices from a shared counter; each index writes only its own outputs, so
// results do not depend on scheduling.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                break;
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// --jobs default: MORPHOSCOPE_JOBS, else hardware concurrency.
inline int default_jobs() {
    if (const char* env = std::getenv("MORPHOSCOPE_JOBS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

} // namespace morpho

#endif // MORPHO_PIPELINE_HPP
