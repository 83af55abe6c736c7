#pragma once

#include <string>
#include <vector>

#include "ensei/protocol.hpp"

namespace ensei {

enum class WeightsSource { Random, File };

/// A schedule file plus how the filter weights are sourced. Weight files are
/// plain whitespace-separated integers, row-major, consumed per conv layer in
/// (out_channel, in_channel) order.
struct ScheduleFile {
    Schedule schedule;
    WeightsSource weights_source = WeightsSource::Random;
    std::int64_t weight_magnitude = 1; // Random source: entries in [-m, m]
};

/// Parses the JSON schedule format:
///   {"layers": [
///     {"kind": "conv", "filter_h": 3, "filter_w": 3, "conv_type": "same",
///      "channels_in": 1, "channels_out": 1},
///     {"kind": "activation", "fn": "relu"}],
///    "weights": "random", "weight_magnitude": 2}
ScheduleFile parse_schedule(const std::string& json_text);
ScheduleFile load_schedule_file(const std::string& path);

/// Whitespace-separated integers.
std::vector<std::int64_t> load_integers(const std::string& path);

/// Splits a flat integer list into per-channel matrices.
std::vector<Mat> to_channel_images(const std::vector<std::int64_t>& values,
                                   std::size_t channels, std::size_t rows,
                                   std::size_t cols);

/// Consumes a flat integer list as the network's weights, in schedule order.
NetworkWeights to_network_weights(const std::vector<std::int64_t>& values,
                                  const Schedule& schedule);

std::string activation_name(ActivationFn fn);

} // namespace ensei
