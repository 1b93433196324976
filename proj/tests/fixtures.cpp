#include "fixtures.hpp"

#include <cmath>

namespace licem::test {

namespace {

enum class Task { majority, context_mux, causal };

struct Generated {
    TensorData data;
};

TensorData generate(Task task, int n, int m, int embed_dim, double noise, const Matrix& mixing,
                    Rng& rng) {
    const bool has_hidden = task == Task::context_mux;
    const int source_dim = m + (has_hidden ? 1 : 0);

    TensorData data;
    data.embeddings = Matrix(n, embed_dim);
    data.concept_targets = Matrix(n, m);
    data.labels.resize(static_cast<size_t>(n));
    data.ids.reserve(static_cast<size_t>(n));

    for (int i = 0; i < n; ++i) {
        std::vector<int> bits(static_cast<size_t>(source_dim));
        for (int j = 0; j < source_dim; ++j) {
            bits[static_cast<size_t>(j)] = rng.uniform() < 0.5 ? 1 : 0;
        }
        for (int j = 0; j < m; ++j) {
            data.concept_targets.at(i, j) = static_cast<double>(bits[static_cast<size_t>(j)]);
        }
        int label = 0;
        switch (task) {
        case Task::majority: {
            const int active = bits[0] + bits[1] + bits[2] + bits[3];
            label = active >= 2 ? 1 : 0;
            break;
        }
        case Task::context_mux: {
            const int z = bits[static_cast<size_t>(m)];
            label = z == 1 ? bits[0] : bits[1];
            break;
        }
        case Task::causal:
            label = (bits[0] == 1 && bits[1] == 0) ? 1 : 0;
            break;
        }
        data.labels[static_cast<size_t>(i)] = label;
        for (int d = 0; d < embed_dim; ++d) {
            double v = 0.0;
            for (int j = 0; j < source_dim; ++j) {
                v += mixing.at(j, d) * (2.0 * bits[static_cast<size_t>(j)] - 1.0);
            }
            data.embeddings.at(i, d) = v + noise * rng.normal();
        }
        data.ids.push_back("s" + std::to_string(i));
    }
    return data;
}

Fixture build(Task task, std::uint64_t seed, const FixtureSpec& spec) {
    const int m = task == Task::causal ? 3 : 4;
    const int source_dim = m + (task == Task::context_mux ? 1 : 0);

    Rng rng(seed);
    Matrix mixing = Matrix::random_normal(source_dim, spec.embed_dim, rng, 1.0);

    Fixture fixture;
    fixture.embed_dim = spec.embed_dim;
    fixture.schema.class_names = {"negative", "positive"};
    for (int j = 0; j < m; ++j) {
        fixture.schema.concept_names.push_back("concept_" + std::to_string(j));
    }
    fixture.train = generate(task, spec.train_n, m, spec.embed_dim, spec.noise, mixing, rng);
    fixture.val = generate(task, spec.val_n, m, spec.embed_dim, spec.noise, mixing, rng);
    fixture.test = generate(task, spec.test_n, m, spec.embed_dim, spec.noise, mixing, rng);
    for (size_t i = 0; i < fixture.val.ids.size(); ++i) {
        fixture.val.ids[i] = "v" + std::to_string(i);
    }
    for (size_t i = 0; i < fixture.test.ids.size(); ++i) {
        fixture.test.ids[i] = "t" + std::to_string(i);
    }
    return fixture;
}

} // namespace

Fixture make_complete_fixture(std::uint64_t seed, const FixtureSpec& spec) {
    return build(Task::majority, seed, spec);
}

Fixture make_context_fixture(std::uint64_t seed, const FixtureSpec& spec) {
    return build(Task::context_mux, seed, spec);
}

Fixture make_causal_fixture(std::uint64_t seed, const FixtureSpec& spec) {
    return build(Task::causal, seed, spec);
}

FixtureFiles to_files(const Fixture& fixture, const TensorData& part, const std::string& id_prefix) {
    FixtureFiles files;
    files.dataset.schema = fixture.schema;
    files.store = EmbeddingStore(fixture.embed_dim, "synthetic fixture");
    const int m = fixture.schema.concept_count();
    for (int i = 0; i < part.size(); ++i) {
        Sample s;
        s.id = id_prefix + std::to_string(i);
        s.label = part.labels[static_cast<size_t>(i)];
        s.concepts.resize(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
            s.concepts[static_cast<size_t>(j)] = static_cast<int>(part.concept_targets.at(i, j));
        }
        files.dataset.samples.push_back(std::move(s));
        std::vector<double> e(static_cast<size_t>(fixture.embed_dim));
        for (int d = 0; d < fixture.embed_dim; ++d) {
            e[static_cast<size_t>(d)] = part.embeddings.at(i, d);
        }
        files.store.put(id_prefix + std::to_string(i), e);
    }
    return files;
}

TensorData with_noisy_embeddings(const TensorData& data, double stddev, std::uint64_t seed) {
    TensorData out = data;
    Rng rng(seed);
    for (double& v : out.embeddings.data) {
        v += stddev * rng.normal();
    }
    return out;
}

} // namespace licem::test
