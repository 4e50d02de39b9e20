#pragma once

// Focused-parent breadth-first state machine.
//
// The partial graph always starts with a synthetic begin-of-graph vertex
// (BOG, id 0, content "<root>"). BOG is the first focused parent; its only
// child is the gold root, attached by the reserved "<root>" label. The focus
// queue holds the focused vertex at its front; NoMoreChildren pops it and
// moves the focus to the next instance in discovery order. Attributes are
// never enqueued, and an instance is enqueued exactly once, when created.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bfamr/amr.hpp"

namespace bfamr {

struct Vocabulary;

enum class ActionKind { NoMoreChildren = 0, ConnectExisting = 1, NewInstance = 2, NewAttribute = 3 };

struct Action {
  ActionKind kind = ActionKind::NoMoreChildren;
  // ConnectExisting: index into DecoderState::produced.
  int target = -1;
  std::vector<std::string> content;
  std::optional<std::string> sense;
  bool quoted = false;
  std::string label;
  bool reverse = false;

  int status() const { return static_cast<int>(kind); }
  bool creates_vertex() const {
    return kind == ActionKind::NewInstance || kind == ActionKind::NewAttribute;
  }

  static Action stop() { return {}; }
  static Action connect(int target, std::string label, bool reverse);
  static Action new_instance(std::vector<std::string> content, std::optional<std::string> sense,
                             std::string label, bool reverse);
  static Action new_attribute(std::vector<std::string> content, std::string label,
                              bool quoted = false);

  bool operator==(const Action&) const = default;
};

inline constexpr int kBogVertex = 0;

struct DecoderState {
  AmrGraph partial;
  std::deque<int> focus_queue;
  int focused = kBogVertex;
  std::vector<int> produced;
  int step_count = 0;
  bool terminal = false;

  // Number of edges already attached while the current vertex is focused.
  int focus_child_count() const;
};

// One decoded or gold step: the focused vertex and the action taken there.
struct TraceStep {
  int focus = kBogVertex;
  Action action;
  bool operator==(const TraceStep&) const = default;
};

struct StepRecord {
  // Number of actions applied before this one; identifies the state snapshot.
  int state_index = 0;
  int focus = kBogVertex;
  Action gold;
};

enum class OrderMode { Deterministic, Random };

DecoderState initial_state();

// Throws UserError when the action is not valid for the state.
DecoderState apply(const DecoderState& state, const Action& action);
// In-place variant used on exclusively owned states.
void apply_in_place(DecoderState& state, const Action& action);

// Breadth-first linearization. Deterministic mode orders each parent's
// children by descending label frequency, ties by label then reverse flag
// then gold vertex id; random mode shuffles them with the given seed.
std::vector<StepRecord> linearize(const AmrGraph& graph,
                                  const std::map<std::string, int>& label_frequency,
                                  OrderMode mode, std::uint64_t seed = 0);
std::vector<StepRecord> linearize(const AmrGraph& graph, const Vocabulary& vocab, OrderMode mode,
                                  std::uint64_t seed = 0);

std::vector<Action> actions_of(const std::vector<StepRecord>& steps);
std::vector<TraceStep> trace_of(const std::vector<StepRecord>& steps);

// Folds apply over the actions and strips BOG. Throws UserError when the
// sequence does not reach a terminal state or BOG does not have one child.
AmrGraph reconstruct(const std::vector<Action>& actions);
AmrGraph strip_bog(const DecoderState& terminal_state);

// True iff every step's focus equals the vertex the FIFO discipline puts in
// focus at that point and each action is valid there.
bool is_breadth_first(const std::vector<TraceStep>& trace);

// JSON-lines trace format, one step per line:
// {"focus":0,"action":"instance","content":["want"],"sense":"01","label":"<root>","reverse":false}
std::string trace_step_to_json(const TraceStep& step);
TraceStep trace_step_from_json(const std::string& line);

}  // namespace bfamr
