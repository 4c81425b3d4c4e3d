#pragma once

#include "varorbit/critvals.hpp"
#include "varorbit/minimax.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace varorbit {

using Json = nlohmann::ordered_json;

inline constexpr int kCsvVersion = 1;

/// {"N", "T", "winding", "samples": [[x0...], ...]}.
Json loop_to_json(const Loop& loop);
Loop loop_from_json(const Json& j);

Json record_to_json(const PSRecord& rec);
Json certificate_to_json(const OrbitCertificate& c);
/// Certificate fields as stored; the loop is rebuilt from its JSON.
OrbitCertificate certificate_from_json(const Json& j);
Json result_to_json(const MinimaxResult& r);
Json barrier_to_json(const BarrierEstimate& b);
Json cu_to_json(const CriticalValueEstimate& e);

/// Columns t, coordinates..., speed, energy; t = s·T.
void write_loop_csv(std::ostream& os, const Lagrangian& L, const Loop& loop);
/// Columns iteration, action, grad_norm, T, excursion.
void write_ps_csv(std::ostream& os, const PSRecord& rec);
/// Columns k, level, quotient, refined, converged, T, pass, el_residual, energy_dev, closure_err.
void write_scan_csv(std::ostream& os, const StruweScan& scan);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace varorbit
