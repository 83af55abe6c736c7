#include "ensei/schedule.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ensei {

namespace {

using nlohmann::json;

ActivationFn parse_fn(const std::string& name) {
    if (name == "relu") return ActivationFn::ReLU;
    if (name == "square") return ActivationFn::Square;
    if (name == "identity") return ActivationFn::Identity;
    throw Error("unknown activation: " + name);
}

ConvType parse_conv_type(const std::string& name) {
    if (name == "same") return ConvType::Same;
    if (name == "valid") return ConvType::Valid;
    throw Error("unknown conv_type: " + name);
}

} // namespace

ScheduleFile parse_schedule(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("schedule parse error: ") + e.what());
    }
    ScheduleFile out;
    if (!doc.contains("layers") || !doc["layers"].is_array())
        throw Error("schedule needs a \"layers\" array");
    for (const json& l : doc["layers"]) {
        LayerSpec spec;
        std::string kind = l.value("kind", "");
        if (kind == "conv") {
            spec.kind = LayerKind::Conv;
            spec.filter_h = l.value("filter_h", 0);
            spec.filter_w = l.value("filter_w", 0);
            spec.conv_type = parse_conv_type(l.value("conv_type", "same"));
            spec.channels_in = l.value("channels_in", 1);
            spec.channels_out = l.value("channels_out", 1);
            if (spec.filter_h == 0 || spec.filter_w == 0)
                throw Error("conv layer needs filter_h/filter_w");
        } else if (kind == "activation") {
            spec.kind = LayerKind::Activation;
            spec.fn = parse_fn(l.value("fn", "identity"));
        } else {
            throw Error("layer kind must be \"conv\" or \"activation\"");
        }
        out.schedule.layers.push_back(spec);
    }
    std::string src = doc.value("weights", "random");
    if (src == "random") out.weights_source = WeightsSource::Random;
    else if (src == "file") out.weights_source = WeightsSource::File;
    else throw Error("weights must be \"random\" or \"file\"");
    out.weight_magnitude = doc.value("weight_magnitude", 1);
    if (out.weight_magnitude < 1) throw Error("weight_magnitude must be >= 1");
    return out;
}

ScheduleFile load_schedule_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schedule file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_schedule(ss.str());
}

std::vector<std::int64_t> load_integers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::vector<std::int64_t> out;
    std::int64_t v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) throw Error("non-integer content in " + path);
    return out;
}

std::vector<Mat> to_channel_images(const std::vector<std::int64_t>& values,
                                   std::size_t channels, std::size_t rows,
                                   std::size_t cols) {
    if (values.size() != channels * rows * cols)
        throw Error("image file has wrong element count");
    std::vector<Mat> out;
    std::size_t idx = 0;
    for (std::size_t c = 0; c < channels; ++c) {
        Mat m(rows, cols);
        for (std::int64_t& v : m.data) v = values[idx++];
        out.push_back(std::move(m));
    }
    return out;
}

NetworkWeights to_network_weights(const std::vector<std::int64_t>& values,
                                  const Schedule& schedule) {
    NetworkWeights out;
    std::size_t idx = 0;
    for (const LayerSpec& l : schedule.layers) {
        if (l.kind != LayerKind::Conv) continue;
        LayerWeights bank(l.channels_out,
                          std::vector<Mat>(l.channels_in, Mat(l.filter_h, l.filter_w)));
        for (auto& row : bank) {
            for (Mat& m : row) {
                for (std::int64_t& v : m.data) {
                    if (idx >= values.size())
                        throw Error("weights file too short for the schedule");
                    v = values[idx++];
                }
            }
        }
        out.push_back(std::move(bank));
    }
    if (idx != values.size())
        throw Error("weights file has trailing values");
    return out;
}

std::string activation_name(ActivationFn fn) {
    switch (fn) {
        case ActivationFn::ReLU: return "relu";
        case ActivationFn::Square: return "square";
        case ActivationFn::Identity: return "identity";
    }
    return "?";
}

} // namespace ensei
