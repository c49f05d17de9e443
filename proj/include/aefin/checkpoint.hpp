#pragma once

#include "aefin/data.hpp"
#include "aefin/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace aefin::model {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::optional<data::NormStats> norm;
};

struct LoadedCheckpoint {
    AefinModel model;
    CheckpointMeta meta;
};

/// Text manifest (key=value lines, terminated by "end") followed by every
/// parameter as little-endian float64 in manifest order.
void write_checkpoint(std::ostream& out, const AefinModel& m, const CheckpointMeta& meta = {});
void save_checkpoint(const std::string& path, const AefinModel& m, const CheckpointMeta& meta = {});

/// Throws VersionMismatch, ShapeMismatch or CorruptFile; never returns a
/// partially loaded model.
LoadedCheckpoint read_checkpoint(std::istream& in);
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace aefin::model
