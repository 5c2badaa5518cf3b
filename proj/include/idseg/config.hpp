#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace idseg {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class LayerKind : uint8_t {
    input = 0,
    conv = 1,         // 3x3 (or 1x1) strided conv + ReLU
    tconv = 2,        // 3x3 stride-2 transposed conv + ReLU
    dense = 3,        // fully connected + ReLU
    flatten = 4,
    broadcast = 5,    // rank-2 vector stamped onto an h x w map
    concat = 6,       // channel concat of previous output with an earlier layer
    output_conv = 7,  // 1x1 conv to one channel + sigmoid
};

inline const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::input: return "input";
        case LayerKind::conv: return "conv";
        case LayerKind::tconv: return "tconv";
        case LayerKind::dense: return "dense";
        case LayerKind::flatten: return "flatten";
        case LayerKind::broadcast: return "broadcast";
        case LayerKind::concat: return "concat";
        case LayerKind::output_conv: return "output_conv";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int channels = 0;     // conv/tconv/output_conv out channels; dense width; input channels
    int kernel = 3;       // conv kernels only
    int stride = 2;       // conv kernels only
    int with_layer = -1;  // concat: index of the earlier layer appended after this one's input
    int height = 0;       // input image / broadcast target height
    int width = 0;        // input image / broadcast target width
};

/// Ordered layer list with skip wiring. layers[0] is always the input spec.
struct ModelConfig {
    std::vector<LayerSpec> layers;

    int input_height() const { return layers.at(0).height; }
    int input_width() const { return layers.at(0).width; }
    int input_channels() const { return layers.at(0).channels; }
};

/// Per-layer output geometry. Rank-2 outputs (flatten/dense) carry the vector
/// width in c with spatial = false.
struct LayerShape {
    int h = 0, w = 0, c = 0;
    bool spatial = true;
};

/// Infers every layer's output shape and validates the wiring as it goes.
inline std::vector<LayerShape> layer_output_shapes(const ModelConfig& config) {
    const auto& layers = config.layers;
    if (layers.empty() || layers[0].kind != LayerKind::input)
        throw ConfigError("config: first layer must be the input spec");
    if (layers[0].height < 1 || layers[0].width < 1 || layers[0].channels < 1)
        throw ConfigError("config: input dimensions must be positive");

    std::vector<LayerShape> shapes;
    shapes.reserve(layers.size());
    shapes.push_back({layers[0].height, layers[0].width, layers[0].channels, true});
    for (size_t i = 1; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const LayerShape& prev = shapes.back();
        const std::string at = "config layer " + std::to_string(i) + " (" + kind_name(l.kind) + ")";
        switch (l.kind) {
            case LayerKind::input:
                throw ConfigError(at + ": input allowed only at position 0");
            case LayerKind::conv:
            case LayerKind::output_conv: {
                if (!prev.spatial) throw ConfigError(at + ": needs a spatial input");
                const int k = l.kind == LayerKind::output_conv ? 1 : l.kernel;
                const int s = l.kind == LayerKind::output_conv ? 1 : l.stride;
                if (k != 1 && k != 3) throw ConfigError(at + ": kernel must be 1 or 3");
                if (s != 1 && s != 2) throw ConfigError(at + ": stride must be 1 or 2");
                if (l.channels < 1) throw ConfigError(at + ": channels must be positive");
                shapes.push_back({(prev.h + s - 1) / s, (prev.w + s - 1) / s, l.channels, true});
                break;
            }
            case LayerKind::tconv:
                if (!prev.spatial) throw ConfigError(at + ": needs a spatial input");
                if (l.channels < 1) throw ConfigError(at + ": channels must be positive");
                shapes.push_back({2 * prev.h, 2 * prev.w, l.channels, true});
                break;
            case LayerKind::dense:
                if (prev.spatial) throw ConfigError(at + ": needs a flattened input");
                if (l.channels < 1) throw ConfigError(at + ": width must be positive");
                shapes.push_back({0, 0, l.channels, false});
                break;
            case LayerKind::flatten:
                if (!prev.spatial) throw ConfigError(at + ": needs a spatial input");
                shapes.push_back({0, 0, prev.h * prev.w * prev.c, false});
                break;
            case LayerKind::broadcast:
                if (prev.spatial) throw ConfigError(at + ": needs a vector input");
                if (l.height < 1 || l.width < 1) throw ConfigError(at + ": target size must be positive");
                shapes.push_back({l.height, l.width, prev.c, true});
                break;
            case LayerKind::concat: {
                if (l.with_layer < 0 || l.with_layer >= static_cast<int>(i))
                    throw ConfigError(at + ": must reference a previously computed layer");
                const LayerShape& ref = shapes[static_cast<size_t>(l.with_layer)];
                if (!prev.spatial || !ref.spatial || prev.h != ref.h || prev.w != ref.w)
                    throw ConfigError(at + ": spatial sizes do not match layer " +
                                      std::to_string(l.with_layer));
                shapes.push_back({prev.h, prev.w, prev.c + ref.c, true});
                break;
            }
        }
    }

    const LayerShape& out = shapes.back();
    if (layers.back().kind != LayerKind::output_conv || out.c != 1)
        throw ConfigError("config: final layer must be a 1-channel sigmoid output_conv");
    return shapes;
}

inline void validate_config(const ModelConfig& config) { (void)layer_output_shapes(config); }

/// Trainable scalar count of one layer given its input shape.
/// conv/tconv: kh*kw*cin*cout + cout; dense: din*dout + dout.
inline int64_t layer_param_count(const LayerSpec& l, const LayerShape& in_shape) {
    switch (l.kind) {
        case LayerKind::conv: {
            const int64_t k = l.kernel;
            return k * k * in_shape.c * l.channels + l.channels;
        }
        case LayerKind::output_conv:
            return static_cast<int64_t>(in_shape.c) * l.channels + l.channels;
        case LayerKind::tconv:
            return 9LL * in_shape.c * l.channels + l.channels;
        case LayerKind::dense:
            return static_cast<int64_t>(in_shape.c) * l.channels + l.channels;
        default:
            return 0;
    }
}

inline int64_t param_count(const ModelConfig& config) {
    const auto shapes = layer_output_shapes(config);
    int64_t total = 0;
    for (size_t i = 1; i < config.layers.size(); ++i)
        total += layer_param_count(config.layers[i], shapes[i - 1]);
    return total;
}

/// Encoder-decoder segmenter: stride-2 conv chain down to a bottleneck, a
/// dense decision head broadcast back onto the bottleneck, then a tconv chain
/// back up with skip concatenations from the matching encoder stages.
inline ModelConfig make_segmenter_config(int in_h, int in_w, int in_c,
                                         const std::vector<int>& encoder_channels,
                                         int dense_hidden, int dense_out,
                                         const std::vector<int>& decoder_channels) {
    if (encoder_channels.size() != decoder_channels.size())
        throw ConfigError("segmenter: encoder and decoder stage counts must match");
    if (encoder_channels.empty()) throw ConfigError("segmenter: need at least one stage");
    const int stages = static_cast<int>(encoder_channels.size());
    if (in_h % (1 << stages) != 0 || in_w % (1 << stages) != 0)
        throw ConfigError("segmenter: input size must be divisible by 2^stages");

    ModelConfig cfg;
    cfg.layers.push_back({LayerKind::input, in_c, 0, 0, -1, in_h, in_w});
    for (int ch : encoder_channels)
        cfg.layers.push_back({LayerKind::conv, ch, 3, 2, -1, 0, 0});
    const int bott_h = in_h >> stages, bott_w = in_w >> stages;
    cfg.layers.push_back({LayerKind::flatten, 0, 0, 0, -1, 0, 0});
    cfg.layers.push_back({LayerKind::dense, dense_hidden, 0, 0, -1, 0, 0});
    cfg.layers.push_back({LayerKind::dense, dense_out, 0, 0, -1, 0, 0});
    cfg.layers.push_back({LayerKind::broadcast, 0, 0, 0, -1, bott_h, bott_w});
    // bottleneck skip: concat with the deepest encoder conv (layer index `stages`)
    cfg.layers.push_back({LayerKind::concat, 0, 0, 0, stages, 0, 0});
    for (int i = 0; i < stages; ++i) {
        cfg.layers.push_back({LayerKind::tconv, decoder_channels[static_cast<size_t>(i)], 3, 2, -1, 0, 0});
        if (i < stages - 1)
            cfg.layers.push_back({LayerKind::concat, 0, 0, 0, stages - 1 - i, 0, 0});
    }
    cfg.layers.push_back({LayerKind::output_conv, 1, 1, 1, -1, 0, 0});
    validate_config(cfg);
    return cfg;
}

/// The pinned reference architecture: 128x128x3 in, four stride-2 encoder
/// stages (16/24/32/48) to an 8x8 bottleneck, dense 3072->48->16 decision
/// head broadcast back, four tconv decoder stages (32/24/16/8) with skips,
/// 1x1 sigmoid output. 214,593 trainable parameters.
inline ModelConfig reference_config() {
    return make_segmenter_config(128, 128, 3, {16, 24, 32, 48}, 48, 16, {32, 24, 16, 8});
}

}  // namespace idseg
