#pragma once

#include "lexiport/synth.hpp"
#include "lexiport/transplant.hpp"
#include "lexiport/vocab.hpp"

namespace lexiport::testing {

// Ten source tokens, five new target tokens with hand-built static tables.
// "tgt_zero" has an all-zero static row and "bee" is already in the base.
struct SmallTransplantFixture {
    Vocabulary base_vocab;
    Matrix base_matrix;
    SourceVocabSet source_set;
    VocabEmbeddingTable source_table;
    VocabEmbeddingTable target_table;
    Vocabulary new_vocab;
};

SmallTransplantFixture make_small_fixture();

}  // namespace lexiport::testing
