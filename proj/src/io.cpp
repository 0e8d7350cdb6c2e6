#include "hwcl/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hwcl/error.hpp"

namespace hwcl {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "read failed on " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed on " + path);
}

namespace {

nlohmann::json parse_json(const std::string& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidSpec, path + " is not valid JSON: " + e.what());
    }
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw Error(ErrorCode::InvalidSpec, where + ": unknown key '" + item.key() + "'");
    }
}

Matrix matrix_from_rows(const nlohmann::json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty()) {
        throw Error(ErrorCode::InvalidSpec, what + " must be a non-empty array of rows");
    }
    const std::size_t cols = rows.front().is_array() ? rows.front().size() : 0;
    if (cols == 0) throw Error(ErrorCode::InvalidSpec, what + " rows must be non-empty arrays");
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || row.size() != cols) {
            throw Error(ErrorCode::InvalidSpec, what + " rows have inconsistent lengths");
        }
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = row[j].get<double>();
    }
    return m;
}

} // namespace

void save_dataset(const PairDataset& data, const SyntheticSpec& spec, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["spec"] = {{"n_clusters", spec.n_clusters},
                 {"pairs_per_cluster", spec.pairs_per_cluster},
                 {"d_in", spec.d_in},
                 {"intra_cluster_noise", spec.intra_cluster_noise},
                 {"query_target_noise", spec.query_target_noise},
                 {"seed", spec.seed}};
    j["d_in"] = data.d_in;
    auto& pairs = j["pairs"] = nlohmann::json::array();
    for (const PairSample& p : data.pairs) {
        pairs.push_back({{"query", p.query}, {"target", p.target}, {"cluster", p.cluster}});
    }
    write_text_file(path, j.dump() + "\n");
}

PairDataset load_dataset(const std::string& path) {
    const nlohmann::json j = parse_json(path);
    try {
        if (j.at("schema_version").get<int>() != 1) {
            throw Error(ErrorCode::InvalidSpec, path + ": unsupported dataset schema_version");
        }
        PairDataset data;
        data.d_in = j.at("d_in").get<std::size_t>();
        if (data.d_in < 2) throw Error(ErrorCode::InvalidSpec, path + ": d_in must be >= 2");
        for (const auto& p : j.at("pairs")) {
            PairSample sample;
            sample.query = p.at("query").get<std::vector<double>>();
            sample.target = p.at("target").get<std::vector<double>>();
            sample.cluster = p.at("cluster").get<int>();
            if (sample.query.size() != data.d_in || sample.target.size() != data.d_in) {
                throw Error(ErrorCode::InvalidSpec, path + ": pair dims disagree with d_in");
            }
            data.pairs.push_back(std::move(sample));
        }
        if (data.pairs.empty()) throw Error(ErrorCode::InvalidSpec, path + ": no pairs");
        return data;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, path + ": malformed dataset: " + e.what());
    }
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
    const nlohmann::json j = parse_json(path);
    reject_unknown_keys(j,
                        {"schema_version", "n_clusters", "pairs_per_cluster", "d_in",
                         "intra_cluster_noise", "query_target_noise", "seed"},
                        path);
    try {
        SyntheticSpec spec;
        spec.n_clusters = j.value("n_clusters", spec.n_clusters);
        spec.pairs_per_cluster = j.value("pairs_per_cluster", spec.pairs_per_cluster);
        spec.d_in = j.value("d_in", spec.d_in);
        spec.intra_cluster_noise = j.value("intra_cluster_noise", spec.intra_cluster_noise);
        spec.query_target_noise = j.value("query_target_noise", spec.query_target_noise);
        spec.seed = j.value("seed", spec.seed);
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, path + ": malformed spec: " + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const nlohmann::json j = parse_json(path);
    reject_unknown_keys(j,
                        {"schema_version", "train", "d_hidden", "d_emb", "shared_towers",
                         "eval_fraction", "eval_k", "histogram_bins"},
                        path);
    try {
        ExperimentConfig config;
        if (j.contains("train")) {
            const nlohmann::json& t = j.at("train");
            reject_unknown_keys(t,
                                {"learning_rate", "steps", "batch_size", "seed", "tau", "alpha",
                                 "variant", "shards"},
                                path + ": train");
            config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
            config.train.steps = t.value("steps", config.train.steps);
            config.train.batch_size = t.value("batch_size", config.train.batch_size);
            config.train.seed = t.value("seed", config.train.seed);
            config.train.loss.tau = t.value("tau", config.train.loss.tau);
            config.train.loss.alpha = t.value("alpha", config.train.loss.alpha);
            config.train.shards = t.value("shards", config.train.shards);
            if (t.contains("variant")) {
                config.train.loss.variant = loss_variant_from_name(t.at("variant").get<std::string>());
            }
        }
        config.d_hidden = j.value("d_hidden", config.d_hidden);
        config.d_emb = j.value("d_emb", config.d_emb);
        config.shared_towers = j.value("shared_towers", config.shared_towers);
        config.eval_fraction = j.value("eval_fraction", config.eval_fraction);
        config.eval_k = j.value("eval_k", config.eval_k);
        config.histogram_bins = j.value("histogram_bins", config.histogram_bins);
        config.train.validate();
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, path + ": malformed config: " + e.what());
    }
}

EmbeddingBatch load_embeddings(const std::string& path) {
    const nlohmann::json j = parse_json(path);
    try {
        EmbeddingBatch batch;
        batch.queries = matrix_from_rows(j.at("queries"), path + ": queries");
        batch.targets = matrix_from_rows(j.at("targets"), path + ": targets");
        if (j.contains("positive_index")) {
            batch.positive_index = j.at("positive_index").get<std::vector<std::size_t>>();
        } else {
            if (batch.queries.rows != batch.targets.rows) {
                throw Error(ErrorCode::InvalidSpec,
                            path + ": positive_index required when N != M");
            }
            batch.positive_index.resize(batch.queries.rows);
            for (std::size_t i = 0; i < batch.positive_index.size(); ++i) {
                batch.positive_index[i] = i;
            }
        }
        batch.validate();
        return batch;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, path + ": malformed embeddings: " + e.what());
    }
}

} // namespace hwcl
