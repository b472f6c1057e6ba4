#include "softdistill/config.h"

#include <charconv>
#include <climits>
#include <fstream>
#include <functional>
#include <sstream>

#include "softdistill/errors.h"
#include "softdistill/text.h"

namespace softdistill {

namespace {

[[noreturn]] void bad_value(const std::string& where, std::string_view what,
                            std::string_view value) {
    throw ConfigError(where + ": invalid " + std::string(what) + " \"" + std::string(value) +
                      "\"");
}

long long parse_i64(std::string_view value, const std::string& where) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
        bad_value(where, "integer", value);
    return v;
}

int parse_int(std::string_view value, const std::string& where) {
    const long long v = parse_i64(value, where);
    if (v < INT_MIN || v > INT_MAX) bad_value(where, "integer", value);
    return static_cast<int>(v);
}

std::uint64_t parse_u64(std::string_view value, const std::string& where) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size())
        bad_value(where, "unsigned integer", value);
    return v;
}

double parse_f64(std::string_view value, const std::string& where) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) bad_value(where, "number", value);
    return v;
}

bool parse_bool(std::string_view value, const std::string& where) {
    if (value == "0" || value == "false") return false;
    if (value == "1" || value == "true") return true;
    bad_value(where, "boolean", value);
}

std::vector<std::string_view> split_list(std::string_view value) {
    std::vector<std::string_view> items;
    while (!value.empty()) {
        const std::size_t comma = value.find(',');
        const std::string_view item = trim(value.substr(0, comma));
        if (!item.empty()) items.push_back(item);
        if (comma == std::string_view::npos) break;
        value.remove_prefix(comma + 1);
    }
    return items;
}

struct KeyEntry {
    std::string_view section;
    std::string_view key;
    std::function<void(ExperimentConfig&, std::string_view, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Ref>
KeyEntry entry_int(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                ref(c) = parse_int(v, where);
            },
            [ref](const ExperimentConfig& c) {
                return std::to_string(ref(const_cast<ExperimentConfig&>(c)));
            }};
}

template <typename Ref>
KeyEntry entry_u64(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                ref(c) = parse_u64(v, where);
            },
            [ref](const ExperimentConfig& c) {
                return std::to_string(ref(const_cast<ExperimentConfig&>(c)));
            }};
}

template <typename Ref>
KeyEntry entry_double(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                ref(c) = parse_f64(v, where);
            },
            [ref](const ExperimentConfig& c) {
                return format_double(ref(const_cast<ExperimentConfig&>(c)));
            }};
}

template <typename Ref>
KeyEntry entry_bool(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                ref(c) = parse_bool(v, where);
            },
            [ref](const ExperimentConfig& c) {
                return ref(const_cast<ExperimentConfig&>(c)) ? "1" : "0";
            }};
}

template <typename Ref>
KeyEntry entry_string(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string&) {
                ref(c) = std::string(v);
            },
            [ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)); }};
}

template <typename Ref>
KeyEntry entry_int_list(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                std::vector<int> items;
                for (std::string_view item : split_list(v)) items.push_back(parse_int(item, where));
                ref(c) = std::move(items);
            },
            [ref](const ExperimentConfig& c) {
                std::string out;
                for (int v : ref(const_cast<ExperimentConfig&>(c))) {
                    if (!out.empty()) out += ',';
                    out += std::to_string(v);
                }
                return out;
            }};
}

template <typename Ref>
KeyEntry entry_u64_list(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                std::vector<std::uint64_t> items;
                for (std::string_view item : split_list(v)) items.push_back(parse_u64(item, where));
                ref(c) = std::move(items);
            },
            [ref](const ExperimentConfig& c) {
                std::string out;
                for (std::uint64_t v : ref(const_cast<ExperimentConfig&>(c))) {
                    if (!out.empty()) out += ',';
                    out += std::to_string(v);
                }
                return out;
            }};
}

template <typename Ref>
KeyEntry entry_double_list(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                std::vector<double> items;
                for (std::string_view item : split_list(v)) items.push_back(parse_f64(item, where));
                ref(c) = std::move(items);
            },
            [ref](const ExperimentConfig& c) {
                std::string out;
                for (double v : ref(const_cast<ExperimentConfig&>(c))) {
                    if (!out.empty()) out += ',';
                    out += format_double(v);
                }
                return out;
            }};
}

template <typename Ref>
KeyEntry entry_string_list(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string&) {
                std::vector<std::string> items;
                for (std::string_view item : split_list(v)) items.emplace_back(item);
                ref(c) = std::move(items);
            },
            [ref](const ExperimentConfig& c) {
                std::string out;
                for (const auto& v : ref(const_cast<ExperimentConfig&>(c))) {
                    if (!out.empty()) out += ',';
                    out += v;
                }
                return out;
            }};
}

template <typename Ref>
KeyEntry entry_loss(std::string_view section, std::string_view key, Ref ref) {
    return {section, key,
            [ref](ExperimentConfig& c, std::string_view v, const std::string& where) {
                try {
                    ref(c) = parse_loss_kind(v);
                } catch (const ConfigError&) {
                    bad_value(where, "loss kind", v);
                }
            },
            [ref](const ExperimentConfig& c) {
                return std::string(loss_kind_name(ref(const_cast<ExperimentConfig&>(c))));
            }};
}

const std::vector<KeyEntry>& registry() {
    static const std::vector<KeyEntry> entries = [] {
        std::vector<KeyEntry> r;

        r.push_back(entry_int("dataset", "num_classes",
                              [](ExperimentConfig& c) -> int& { return c.dataset.num_classes; }));
        r.push_back(entry_int("dataset", "extra_modes",
                              [](ExperimentConfig& c) -> int& { return c.dataset.extra_modes; }));
        r.push_back(entry_int("dataset", "dim",
                              [](ExperimentConfig& c) -> int& { return c.dataset.dim; }));
        r.push_back(entry_double("dataset", "class_mean_scale", [](ExperimentConfig& c) -> double& {
            return c.dataset.class_mean_scale;
        }));
        r.push_back(entry_double("dataset", "within_stddev", [](ExperimentConfig& c) -> double& {
            return c.dataset.within_stddev;
        }));
        r.push_back(entry_int("dataset", "train_size",
                              [](ExperimentConfig& c) -> int& { return c.dataset.train_size; }));
        r.push_back(entry_int("dataset", "val_size",
                              [](ExperimentConfig& c) -> int& { return c.dataset.val_size; }));
        r.push_back(entry_int("dataset", "gallery_size",
                              [](ExperimentConfig& c) -> int& { return c.dataset.gallery_size; }));
        r.push_back(entry_double("dataset", "duplicate_fraction",
                                 [](ExperimentConfig& c) -> double& {
                                     return c.dataset.duplicate_fraction;
                                 }));
        r.push_back(entry_u64("dataset", "seed", [](ExperimentConfig& c) -> std::uint64_t& {
            return c.dataset.seed;
        }));

        auto train_keys = [&r](std::string_view section,
                               TrainConfig& (*stage)(ExperimentConfig&)) {
            r.push_back(entry_int(section, "epochs", [stage](ExperimentConfig& c) -> int& {
                return stage(c).epochs;
            }));
            r.push_back(entry_double(section, "base_lr", [stage](ExperimentConfig& c) -> double& {
                return stage(c).base_lr;
            }));
            r.push_back(entry_double(section, "momentum", [stage](ExperimentConfig& c) -> double& {
                return stage(c).momentum;
            }));
            r.push_back(entry_double(section, "weight_decay",
                                     [stage](ExperimentConfig& c) -> double& {
                                         return stage(c).weight_decay;
                                     }));
            r.push_back(entry_int(section, "warmup_epochs", [stage](ExperimentConfig& c) -> int& {
                return stage(c).warmup_epochs;
            }));
            r.push_back(entry_int(section, "batch_size", [stage](ExperimentConfig& c) -> int& {
                return stage(c).batch_size;
            }));
            r.push_back(entry_u64(section, "seed", [stage](ExperimentConfig& c) -> std::uint64_t& {
                return stage(c).seed;
            }));
            r.push_back(entry_int(section, "eval_every", [stage](ExperimentConfig& c) -> int& {
                return stage(c).eval_every;
            }));
        };

        r.push_back(entry_int_list("teacher", "hidden", [](ExperimentConfig& c) -> std::vector<int>& {
            return c.teacher_hidden;
        }));
        train_keys("teacher", [](ExperimentConfig& c) -> TrainConfig& { return c.teacher; });

        r.push_back(entry_int_list("student", "hidden", [](ExperimentConfig& c) -> std::vector<int>& {
            return c.student_hidden;
        }));

        r.push_back(entry_double("curation", "similarity_threshold",
                                 [](ExperimentConfig& c) -> double& {
                                     return c.curation.similarity_threshold;
                                 }));
        r.push_back(entry_int("curation", "top_k_per_class", [](ExperimentConfig& c) -> int& {
            return c.curation.top_k_per_class;
        }));

        r.push_back(entry_loss("distill", "loss", [](ExperimentConfig& c) -> LossKind& {
            return c.distill.loss;
        }));
        train_keys("distill", [](ExperimentConfig& c) -> TrainConfig& { return c.distill; });
        r.push_back(entry_double("distill", "quality_r0", [](ExperimentConfig& c) -> double& {
            return c.quality_r0;
        }));
        r.push_back(entry_bool("distill", "skip_quality_gate", [](ExperimentConfig& c) -> bool& {
            return c.skip_quality_gate;
        }));

        train_keys("finetune", [](ExperimentConfig& c) -> TrainConfig& { return c.finetune; });

        r.push_back(entry_string("evaluate", "checkpoint", [](ExperimentConfig& c) -> std::string& {
            return c.eval_checkpoint;
        }));
        r.push_back(entry_string("evaluate", "dataset", [](ExperimentConfig& c) -> std::string& {
            return c.eval_dataset;
        }));

        r.push_back(entry_double_list("sweep", "weight_decay",
                                      [](ExperimentConfig& c) -> std::vector<double>& {
                                          return c.sweep_weight_decay;
                                      }));
        r.push_back(entry_string_list("sweep", "teacher_checkpoint",
                                      [](ExperimentConfig& c) -> std::vector<std::string>& {
                                          return c.sweep_teacher_checkpoint;
                                      }));
        r.push_back(entry_int_list("sweep", "unlabeled_volume",
                                   [](ExperimentConfig& c) -> std::vector<int>& {
                                       return c.sweep_unlabeled_volume;
                                   }));
        r.push_back(entry_int_list("sweep", "epochs", [](ExperimentConfig& c) -> std::vector<int>& {
            return c.sweep_epochs;
        }));
        r.push_back(entry_u64_list("sweep", "seeds",
                                   [](ExperimentConfig& c) -> std::vector<std::uint64_t>& {
                                       return c.seeds;
                                   }));

        r.push_back(entry_string("plot", "input", [](ExperimentConfig& c) -> std::string& {
            return c.plot_input;
        }));
        r.push_back(entry_string("plot", "series", [](ExperimentConfig& c) -> std::string& {
            return c.plot_series;
        }));
        r.push_back(entry_string("plot", "x", [](ExperimentConfig& c) -> std::string& {
            return c.plot_x;
        }));
        r.push_back(entry_string("plot", "y", [](ExperimentConfig& c) -> std::string& {
            return c.plot_y;
        }));
        r.push_back(entry_string("plot", "output", [](ExperimentConfig& c) -> std::string& {
            return c.plot_output;
        }));

        r.push_back(entry_string("output", "dir", [](ExperimentConfig& c) -> std::string& {
            return c.out_dir;
        }));
        return r;
    }();
    return entries;
}

const KeyEntry* find_entry(std::string_view section, std::string_view key) {
    for (const auto& e : registry())
        if (e.section == section && e.key == key) return &e;
    return nullptr;
}

bool section_known(std::string_view section) {
    for (const auto& e : registry())
        if (e.section == section) return true;
    return false;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.teacher.loss = LossKind::kHardCE;
    cfg.teacher.epochs = 100;
    cfg.teacher.base_lr = 0.1;
    cfg.teacher.weight_decay = 1e-4;
    cfg.teacher.warmup_epochs = 5;

    cfg.distill.loss = LossKind::kJsDiv;
    cfg.distill.epochs = 120;
    cfg.distill.base_lr = 0.1;
    cfg.distill.weight_decay = 1e-4;
    cfg.distill.warmup_epochs = 5;

    cfg.finetune.loss = LossKind::kHardCE;
    cfg.finetune.epochs = 10;
    cfg.finetune.base_lr = 0.01;  // 0.1 x distill base_lr
    cfg.finetune.weight_decay = 1e-4;
    cfg.finetune.warmup_epochs = 0;
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg = default_config();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        const std::string where = origin + ":" + std::to_string(line_no);

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!section_known(section))
                throw ConfigError(where + ": unknown section \"" + section + "\"");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(where + ": expected \"key = value\"");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(where + ": key before any [section]");
        const KeyEntry* e = find_entry(section, key);
        if (e == nullptr)
            throw ConfigError(where + ": unknown key \"" + section + "." + key + "\"");
        e->set(cfg, value, where);
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override \"" + assignment + "\": expected section.key=value");
    const std::string_view lhs = trim(std::string_view(assignment).substr(0, eq));
    const std::string_view value = trim(std::string_view(assignment).substr(eq + 1));
    const std::size_t dot = lhs.find('.');
    if (dot == std::string_view::npos)
        throw ConfigError("override \"" + assignment + "\": expected section.key=value");
    const std::string_view section = lhs.substr(0, dot);
    const std::string_view key = lhs.substr(dot + 1);
    const KeyEntry* e = find_entry(section, key);
    if (e == nullptr)
        throw ConfigError("override: unknown key \"" + std::string(lhs) + "\"");
    e->set(cfg, value, "override " + assignment);
}

std::string render_config(const ExperimentConfig& cfg) {
    std::string out;
    std::string_view current;
    for (const auto& e : registry()) {
        if (e.section != current) {
            if (!out.empty()) out += '\n';
            out += '[';
            out += e.section;
            out += "]\n";
            current = e.section;
        }
        out += e.key;
        out += " = ";
        out += e.get(cfg);
        out += '\n';
    }
    return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return hash_string(render_config(cfg)); }

std::uint64_t training_hash(const ExperimentConfig& cfg) {
    static constexpr std::string_view kSections[] = {"dataset", "teacher", "student",
                                                     "curation", "distill", "finetune"};
    std::string out;
    for (const auto& e : registry()) {
        bool keep = false;
        for (std::string_view s : kSections) keep = keep || e.section == s;
        if (!keep) continue;
        out += e.section;
        out += '.';
        out += e.key;
        out += " = ";
        out += e.get(cfg);
        out += '\n';
    }
    return hash_string(out);
}

MlpSpec teacher_spec(const ExperimentConfig& cfg) {
    return MlpSpec{cfg.dataset.dim, cfg.teacher_hidden, cfg.dataset.num_classes};
}

MlpSpec student_spec(const ExperimentConfig& cfg) {
    return MlpSpec{cfg.dataset.dim, cfg.student_hidden, cfg.dataset.num_classes};
}

}  // namespace softdistill
