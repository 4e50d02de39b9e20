#pragma once

// Beam search over the focused-parent state machine. Every hypothesis only
// ever grows through apply(), so each returned trace is breadth-first.

#include <vector>

#include "bfamr/model.hpp"
#include "bfamr/oracle.hpp"

namespace bfamr {

struct DecodeOptions {
  int beam = 8;
  // <= 0 means 4 * (2m + 10) for an m-token sentence.
  int max_actions = 0;
  // Compare finished hypotheses by log_prob / action count.
  bool length_norm = true;
};

struct Hypothesis {
  DecoderState state;
  double log_prob = 0.0;
  bool finished = false;
  std::vector<TraceStep> trace;
};

struct Candidate {
  Action action;
  // Log-probability of the whole action (status plus its components).
  double score = 0.0;
};

struct ParseResult {
  AmrGraph graph;
  Hypothesis best;
  // Ranking score of best (normalized when length_norm is on).
  double score = 0.0;
};

int default_max_actions(int sentence_length);

// Candidate actions for an unfinished hypothesis. NoMoreChildren is always
// present; at most k existing targets, k new instances and k new attributes
// follow, each with its greedy sense/label/reverse completion. Candidates that
// the state machine would reject are left out.
std::vector<Candidate> expand(ForwardPass& pass, const Hypothesis& hyp, int k);

ParseResult parse(const Model& model, const AnnotatedSentence& sentence,
                  const DecodeOptions& options = {});
// Plain beam search without the greedy fallback; beam = 1 is greedy decoding.
ParseResult beam_search(const Model& model, const AnnotatedSentence& sentence,
                        const DecodeOptions& options);

// Attribute literals that are not numbers or polarity signs get quotes.
bool attribute_needs_quotes(const std::string& literal);

}  // namespace bfamr
