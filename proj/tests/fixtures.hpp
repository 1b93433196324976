#pragma once

#include <string>
#include <vector>

#include "licem/dataset.hpp"
#include "licem/embedding.hpp"
#include "licem/train.hpp"

namespace licem::test {

// Synthetic corpora with known concept-to-task structure, used as oracles for
// the end-to-end training, intervention and causal-effect behavior.
struct Fixture {
    ConceptSchema schema;
    TensorData train;
    TensorData val;
    TensorData test;
    int embed_dim = 0;
};

struct FixtureSpec {
    int train_n = 2000;
    int val_n = 250;
    int test_n = 500;
    int embed_dim = 16;
    double noise = 0.05;
};

// Concepts fully determine the task: 4 i.i.d. Bernoulli concepts, embeddings
// are a fixed random linear image of the centered concept bits plus Gaussian
// noise, and the label is the majority vote (at least 2 active concepts).
Fixture make_complete_fixture(std::uint64_t seed, const FixtureSpec& spec = {});

// Same construction plus a context bit present in the embedding but absent
// from the concept set; the label is c0 when the context bit is on and c1
// otherwise, so concept scores alone cap at 75% accuracy.
Fixture make_context_fixture(std::uint64_t seed, const FixtureSpec& spec = {});

// Binary task caused by concept 0 positively and concept 1 negatively
// (y = c0 AND NOT c1); a third concept is irrelevant.
Fixture make_causal_fixture(std::uint64_t seed, const FixtureSpec& spec = {});

// File-backed view of a fixture partition for CLI pipeline tests.
struct FixtureFiles {
    Dataset dataset;
    EmbeddingStore store;
};
FixtureFiles to_files(const Fixture& fixture, const TensorData& part, const std::string& id_prefix);

// Gaussian perturbation of embeddings, used to degrade concept predictions at
// inference so interventions have something to repair.
TensorData with_noisy_embeddings(const TensorData& data, double stddev, std::uint64_t seed);

} // namespace licem::test
