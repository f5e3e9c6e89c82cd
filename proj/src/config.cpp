#include "flexenc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {

std::string lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(const std::string& key, int line, const std::string& detail) {
    throw ConfigError("config key '" + key + "' (line " + std::to_string(line) + "): " + detail);
}

double parse_real(const std::string& key, int line, std::string_view v) {
    try {
        std::size_t pos = 0;
        std::string s(v);
        double d = std::stod(s, &pos);
        if (pos != s.size()) bad_value(key, line, "malformed number '" + s + "'");
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, line, "malformed number '" + std::string(v) + "'");
    }
}

std::int64_t parse_int(const std::string& key, int line, std::string_view v) {
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, line, "malformed integer '" + std::string(v) + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, int line, std::string_view v) {
    std::string lv = lower(v);
    if (lv == "true") return true;
    if (lv == "false") return false;
    bad_value(key, line, "expected true or false, got '" + std::string(v) + "'");
}

// Bracketed comma-separated list, e.g. [512, 256].
std::vector<std::string> parse_list(const std::string& key, int line, std::string_view v) {
    v = trim(v);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
        bad_value(key, line, "expected bracketed list, got '" + std::string(v) + "'");
    }
    v = v.substr(1, v.size() - 2);
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= v.size()) {
        std::size_t comma = v.find(',', start);
        std::string_view item = (comma == std::string_view::npos)
                                    ? v.substr(start)
                                    : v.substr(start, comma - start);
        item = trim(item);
        if (!item.empty()) items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return items;
}

}  // namespace

std::string pivot_name(Pivot p) { return p == Pivot::UserBased ? "user" : "item"; }

std::string pivot_indexes(Pivot p) { return p == Pivot::UserBased ? "[0,1]" : "[1,0]"; }

Pivot pivot_from_string(std::string_view text) {
    std::string t = lower(trim(text));
    t.erase(std::remove_if(t.begin(), t.end(),
                           [](char c) { return c == ' ' || c == '\t'; }),
            t.end());
    if (t == "[0,1]" || t == "user") return Pivot::UserBased;
    if (t == "[1,0]" || t == "item") return Pivot::ItemBased;
    throw ConfigError("pivot must be [0,1] (user-based) or [1,0] (item-based), got '" +
                      std::string(text) + "'");
}

void ModelConfig::validate() const {
    auto check_prob = [](const char* name, double v) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw ConfigError(std::string("config key '") + name + "': must be in [0,1), got " +
                              format_double(v));
        }
    };
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw ConfigError("config key 'lr': must be positive and finite, got " + format_double(lr));
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw ConfigError("config key 'weight_decay': must be >= 0, got " +
                          format_double(weight_decay));
    }
    if (hidden_layers.empty() || hidden_layers.size() > 5) {
        throw ConfigError("config key 'hidden_layers': need 1..5 layers, got " +
                          std::to_string(hidden_layers.size()));
    }
    for (int h : hidden_layers) {
        if (h < 1) {
            throw ConfigError("config key 'hidden_layers': sizes must be >= 1, got " +
                              std::to_string(h));
        }
    }
    check_prob("drop_prob", drop_prob);
    check_prob("noise_prob", noise_prob);
    check_prob("test_mask_rate", test_mask_rate);
    check_prob("test_split_rate", test_split_rate);
    if (train_batch_size < 1) {
        throw ConfigError("config key 'train_batch_size': must be >= 1, got " +
                          std::to_string(train_batch_size));
    }
    if (epochs < 0) {
        throw ConfigError("config key 'epochs': must be >= 0, got " + std::to_string(epochs));
    }
    if (dense_refeed < 0) {
        throw ConfigError("config key 'dense_refeed': must be >= 0, got " +
                          std::to_string(dense_refeed));
    }
}

ModelConfig parse_config_text(std::string_view text) {
    ModelConfig cfg;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    std::vector<std::string> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key=value, got '" + std::string(line) + "'");
        }
        std::string key = lower(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            bad_value(key, line_no, "duplicate key");
        }
        seen.push_back(key);

        if (key == "lr") {
            cfg.lr = parse_real(key, line_no, value);
        } else if (key == "weight_decay") {
            cfg.weight_decay = parse_real(key, line_no, value);
        } else if (key == "hidden_layers") {
            cfg.hidden_layers.clear();
            for (const std::string& item : parse_list(key, line_no, value)) {
                cfg.hidden_layers.push_back(static_cast<int>(parse_int(key, line_no, item)));
            }
        } else if (key == "drop_prob") {
            cfg.drop_prob = parse_real(key, line_no, value);
        } else if (key == "noise_prob") {
            cfg.noise_prob = parse_real(key, line_no, value);
        } else if (key == "train_batch_size") {
            cfg.train_batch_size = static_cast<int>(parse_int(key, line_no, value));
        } else if (key == "epochs") {
            cfg.epochs = static_cast<int>(parse_int(key, line_no, value));
        } else if (key == "optimizer") {
            try {
                cfg.optimizer = optimizer_from_name(value);
            } catch (const ConfigError& e) {
                bad_value(key, line_no, e.what());
            }
        } else if (key == "activation") {
            try {
                cfg.activation = activation_from_name(value);
            } catch (const ConfigError& e) {
                bad_value(key, line_no, e.what());
            }
        } else if (key == "dense_refeed") {
            cfg.dense_refeed = static_cast<int>(parse_int(key, line_no, value));
        } else if (key == "dense_refeed_rounding") {
            cfg.dense_refeed_rounding = parse_bool(key, line_no, value);
        } else if (key == "decoder_constraint") {
            cfg.decoder_constraint = parse_bool(key, line_no, value);
        } else if (key == "mean_normalization") {
            cfg.mean_normalization = parse_bool(key, line_no, value);
        } else if (key == "prediction_rounding") {
            cfg.prediction_rounding = parse_bool(key, line_no, value);
        } else if (key == "pivot") {
            try {
                cfg.pivot = pivot_from_string(value);
            } catch (const ConfigError& e) {
                bad_value(key, line_no, e.what());
            }
        } else if (key == "test_mask_rate") {
            cfg.test_mask_rate = parse_real(key, line_no, value);
        } else if (key == "test_split_rate") {
            cfg.test_split_rate = parse_real(key, line_no, value);
        } else if (key == "seed") {
            cfg.seed = parse_int(key, line_no, value);
        } else {
            throw ConfigError("config key '" + key + "' (line " + std::to_string(line_no) +
                              "): unknown key");
        }
    }
    cfg.validate();
    return cfg;
}

ModelConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return std::to_string(v);
    return std::string(buf, ptr);
}

std::string serialize_config(const ModelConfig& c) {
    std::ostringstream out;
    out << "lr=" << format_double(c.lr) << '\n';
    out << "weight_decay=" << format_double(c.weight_decay) << '\n';
    out << "hidden_layers=[";
    for (std::size_t i = 0; i < c.hidden_layers.size(); ++i) {
        if (i) out << ',';
        out << c.hidden_layers[i];
    }
    out << "]\n";
    out << "drop_prob=" << format_double(c.drop_prob) << '\n';
    out << "noise_prob=" << format_double(c.noise_prob) << '\n';
    out << "train_batch_size=" << c.train_batch_size << '\n';
    out << "epochs=" << c.epochs << '\n';
    out << "optimizer=" << optimizer_name(c.optimizer) << '\n';
    out << "activation=" << activation_name(c.activation) << '\n';
    out << "dense_refeed=" << c.dense_refeed << '\n';
    out << "dense_refeed_rounding=" << (c.dense_refeed_rounding ? "true" : "false") << '\n';
    out << "decoder_constraint=" << (c.decoder_constraint ? "true" : "false") << '\n';
    out << "mean_normalization=" << (c.mean_normalization ? "true" : "false") << '\n';
    out << "prediction_rounding=" << (c.prediction_rounding ? "true" : "false") << '\n';
    out << "pivot=" << pivot_indexes(c.pivot) << '\n';
    out << "test_mask_rate=" << format_double(c.test_mask_rate) << '\n';
    out << "test_split_rate=" << format_double(c.test_split_rate) << '\n';
    out << "seed=" << c.seed << '\n';
    return out.str();
}

}  // namespace flexenc
