#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flexenc/activations.hpp"
#include "flexenc/optim.hpp"

namespace flexenc {

// Which axis of the rating table forms the autoencoder's input rows.
enum class Pivot { UserBased, ItemBased };

std::string pivot_name(Pivot p);                 // "user" / "item"
std::string pivot_indexes(Pivot p);              // "[0,1]" / "[1,0]"
Pivot pivot_from_string(std::string_view text);  // accepts either form

// The full configuration of one experiment: the 17 tunable parameters plus a
// seed that makes every run replayable. Defaults are the documented example
// values; seed defaults to 42.
struct ModelConfig {
    double lr = 0.001;
    double weight_decay = 0.001;
    std::vector<int> hidden_layers = {512, 256};
    double drop_prob = 0.3;
    double noise_prob = 0.2;
    int train_batch_size = 128;
    int epochs = 20;
    OptimizerKind optimizer = OptimizerKind::ADAM;
    ActivationKind activation = ActivationKind::RELU;
    int dense_refeed = 1;
    bool dense_refeed_rounding = true;
    bool decoder_constraint = false;
    bool mean_normalization = true;
    bool prediction_rounding = false;
    Pivot pivot = Pivot::UserBased;
    double test_mask_rate = 0.5;
    double test_split_rate = 0.3;
    std::int64_t seed = 42;

    // Throws ConfigError naming the offending field.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

// Plain key=value text, one key per line; '#' starts a comment. Unknown keys
// are rejected; every key is optional and falls back to the default above.
ModelConfig parse_config_text(std::string_view text);
ModelConfig parse_config_file(const std::string& path);

// Canonical key=value form; parse(serialize(c)) == c for any valid config.
std::string serialize_config(const ModelConfig& config);

// Shortest decimal form that round-trips the exact double.
std::string format_double(double v);

}  // namespace flexenc
