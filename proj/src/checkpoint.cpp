#include "flexenc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {

constexpr const char* kMagic = "flexenc-checkpoint-v1";

void write_f32_le(std::ostream& out, const std::vector<float>& v) {
    for (float f : v) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
        const char bytes[4] = {
            static_cast<char>(bits & 0xFF),
            static_cast<char>((bits >> 8) & 0xFF),
            static_cast<char>((bits >> 16) & 0xFF),
            static_cast<char>((bits >> 24) & 0xFF),
        };
        out.write(bytes, 4);
    }
}

void read_f32_le(std::istream& in, std::vector<float>& v) {
    for (float& f : v) {
        unsigned char bytes[4];
        in.read(reinterpret_cast<char*>(bytes), 4);
        if (!in) throw ParseError("checkpoint: truncated parameter array");
        const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                                   (static_cast<std::uint32_t>(bytes[1]) << 8) |
                                   (static_cast<std::uint32_t>(bytes[2]) << 16) |
                                   (static_cast<std::uint32_t>(bytes[3]) << 24);
        f = std::bit_cast<float>(bits);
    }
}

// Arrays in manifest order.
std::vector<const std::vector<float>*> array_list(const FlexModel& model) {
    std::vector<const std::vector<float>*> arrays;
    for (const LayerParams& l : model.encoder) arrays.push_back(&l.weight);
    for (const LayerParams& l : model.encoder) arrays.push_back(&l.bias);
    for (const LayerParams& l : model.decoder) arrays.push_back(&l.bias);
    for (const LayerParams& l : model.decoder) {
        if (l.tied_to < 0) arrays.push_back(&l.weight);
    }
    return arrays;
}

std::vector<std::vector<float>*> array_list(FlexModel& model) {
    std::vector<std::vector<float>*> arrays;
    for (LayerParams& l : model.encoder) arrays.push_back(&l.weight);
    for (LayerParams& l : model.encoder) arrays.push_back(&l.bias);
    for (LayerParams& l : model.decoder) arrays.push_back(&l.bias);
    for (LayerParams& l : model.decoder) {
        if (l.tied_to < 0) arrays.push_back(&l.weight);
    }
    return arrays;
}

}  // namespace

void save_checkpoint(const std::string& path, const FlexModel& model,
                     const ModelConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");

    out << kMagic << '\n';
    out << "# config\n" << serialize_config(config);
    out << "# model\n";
    out << "n=" << model.n << '\n';
    out << "layer_dims=[";
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
        if (i) out << ',';
        out << model.encoder[i].out;
    }
    out << "]\n";
    out << "activation=" << activation_name(config.activation) << '\n';
    out << "decoder_constraint=" << (config.decoder_constraint ? "true" : "false") << '\n';
    out << "precision=float32\n";
    auto arrays = array_list(model);
    out << "arrays=" << arrays.size() << '\n';
    for (const auto* a : arrays) out << "array_len=" << a->size() << '\n';
    out << "data\n";
    for (const auto* a : arrays) write_f32_le(out, *a);
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

std::pair<FlexModel, ModelConfig> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");

    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw ParseError("checkpoint '" + path + "': bad magic line");
    }

    std::ostringstream config_text;
    int n = -1;
    std::vector<std::size_t> lens;
    std::size_t declared_arrays = 0;
    while (std::getline(in, line)) {
        if (line == "data") break;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("checkpoint '" + path + "': malformed manifest line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "n") {
            n = std::stoi(value);
        } else if (key == "layer_dims" || key == "activation" || key == "decoder_constraint") {
            // Redundant with the config echo; dims are rebuilt from it.
        } else if (key == "precision") {
            if (value != "float32") {
                throw ParseError("checkpoint '" + path + "': unsupported precision " + value);
            }
        } else if (key == "arrays") {
            declared_arrays = std::stoul(value);
        } else if (key == "array_len") {
            lens.push_back(std::stoul(value));
        } else {
            config_text << line << '\n';
        }
    }
    if (n < 1) throw ParseError("checkpoint '" + path + "': missing input dimension");
    if (lens.size() != declared_arrays) {
        throw ParseError("checkpoint '" + path + "': array directory is inconsistent");
    }

    ModelConfig config = parse_config_text(config_text.str());
    FlexModel model = build_model_arch(config, n);
    auto arrays = array_list(model);
    if (arrays.size() != lens.size()) {
        throw ParseError("checkpoint '" + path + "': expected " + std::to_string(arrays.size()) +
                         " arrays, manifest lists " + std::to_string(lens.size()));
    }
    for (std::size_t i = 0; i < arrays.size(); ++i) {
        if (arrays[i]->size() != lens[i]) {
            throw ParseError("checkpoint '" + path + "': array " + std::to_string(i) +
                             " length mismatch");
        }
        read_f32_le(in, *arrays[i]);
    }
    return {std::move(model), std::move(config)};
}

}  // namespace flexenc
