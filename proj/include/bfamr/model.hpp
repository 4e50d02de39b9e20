#pragma once

// The parser network: BERT-based word embeddings, sentence encoder, partial
// graph encoder, interactive layers and the prediction heads. A Model owns
// the parameters; a ForwardPass evaluates it for one sentence on one tape.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bfamr/corpus.hpp"
#include "bfamr/embedder.hpp"
#include "bfamr/nn.hpp"
#include "bfamr/oracle.hpp"
#include "bfamr/vocab.hpp"

namespace bfamr {

struct ModelConfig {
  int graph_hidden = 512;
  int refinement_emb = 300;
  int contextual_dim = 64;
  int sent_layers = 4;
  int graph_layers = 4;
  int interact_layers = 4;
  int ffn_hidden = 1024;
  int heads = 8;
  double dropout = 0.1;
  // When false the graph encoder ignores edge embeddings.
  bool use_edges = true;
  std::string embedder = "stub";
  std::uint64_t embedder_seed = 17;
  std::string embedder_path;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

// Value copies of one step's distributions.
struct StepDistributions {
  Tensor status;           // 1 x 4
  Tensor existing;         // 1 x t, over partial-graph vertices
  Tensor instance_phase;   // 1 x 2: [new, copy]
  Tensor instance_new;     // 1 x |content|
  Tensor lemma_copy;       // 1 x m
  Tensor attribute_phase;  // 1 x 2
  Tensor attribute_new;    // 1 x |content|
  Tensor token_copy;       // 1 x m
};

// Mixture probability of every content unit reachable at this step: vocab
// entries (including <unk>) plus sentence lemmas (instances) or tokens
// (attributes). Sums to 1.
std::map<std::string, double> content_distribution(const StepDistributions& d,
                                                   const Vocabulary& vocab,
                                                   const AnnotatedSentence& sentence,
                                                   bool attribute);

class Model {
 public:
  Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed,
        std::shared_ptr<const ContextualEmbedder> embedder = nullptr);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ContextualEmbedder& embedder() const { return *embedder_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<Model> load(const std::filesystem::path& dir);

 private:
  friend class ForwardPass;

  struct EncoderLayer {
    MultiHeadAttention attn;
    LayerNorm ln_attn;
    FeedForward ffn;
    LayerNorm ln_ffn;
  };
  struct GraphLayer {
    const Parameter* vertex_w = nullptr;  // g x g, acts on neighbour vectors
    const Parameter* edge_w = nullptr;    // g x g, acts on edge embeddings
    LayerNorm ln_msg;
    FeedForward ffn;
    LayerNorm ln_ffn;
  };
  struct InteractLayer {
    MultiHeadAttention graph_cross, graph_self;
    LayerNorm graph_ln0, graph_ln1, graph_ln2;
    FeedForward graph_ffn;
    MultiHeadAttention sent_cross, sent_self;
    LayerNorm sent_ln0, sent_ln1, sent_ln2, sent_ln3;
    FeedForward sent_ffn;
  };

  void build();

  ModelConfig config_;
  Vocabulary vocab_;
  std::shared_ptr<const ContextualEmbedder> embedder_;
  ParamStore params_;

  // Word embedding layer.
  Linear bert_proj_;   // W^B: e x b
  Embedding refine_;   // over vocab.word
  Linear word_out_;    // W^T: g x e
  // Sentence embedding.
  Embedding pos_, ner_;
  Linear sent_proj_;
  const Parameter* sent_start_ = nullptr;
  std::vector<EncoderLayer> sent_layers_;
  // Graph encoder.
  Embedding edge_label_, edge_reverse_;
  std::vector<GraphLayer> graph_layers_;
  const Parameter* graph_start_ = nullptr;
  std::vector<InteractLayer> interact_layers_;
  // Heads.
  Linear status_;
  Linear existing_query_, existing_key_;
  Linear conc_, attr_;
  Linear phase_, new_content_;
  Linear sense_;
  Linear edge_label_head_, edge_reverse_head_;
  // Label rows for the reverse head, separate from the graph encoder's.
  Embedding reverse_label_;
};

// Tape-level outputs of one step.
struct StepOutput {
  Var graph;  // t x g graph-encoder output (before interaction)
  Var hp;     // 1 x g
  Var gp;     // t x g
  Var status, existing;
  Var inst_hidden, inst_phase, inst_new, lemma_copy;
  Var attr_hidden, attr_phase, attr_new, token_copy;

  StepDistributions values() const;
};

class ForwardPass {
 public:
  // dropout_rng == nullptr disables dropout.
  ForwardPass(const Model& model, Tape& tape, const AnnotatedSentence& sentence,
              std::mt19937_64* dropout_rng = nullptr);

  Tape& tape() { return tape_; }
  const Model& model() const { return model_; }
  const AnnotatedSentence& sentence() const { return sentence_; }

  // w = W^T relu(W^B mean(subtoken vectors) + Emb(unit)), 1 x g. Cached.
  Var bert_based_embed(const std::string& unit);
  // Same for several units at once (n x g), uncached.
  Var bert_based_embed_rows(const std::vector<std::string>& units);
  Var token_embeddings() const { return tokens_; }
  Var lemma_embeddings() const { return lemmas_; }
  // Five-part embedding e_0..e_m, (m+1) x g.
  Var sentence_embeddings() const { return embedded_; }
  // h_0..h_m, (m+1) x g.
  Var sentence_encoding() const { return encoded_; }

  Var embed_vertex(const Vertex& v) { return bert_based_embed(v.content_unit()); }
  Var embed_edge(int label_id, bool reverse);
  // g_1..g_t for the partial graph, t x g.
  Var encode_graph(const AmrGraph& partial);
  // Returns {h^p, g^p_1..t}.
  std::pair<Var, Var> interact(Var graph_encoding, int focused);

  StepOutput step(const DecoderState& state);
  Var sense(const StepOutput& out, const std::string& content_unit);
  Var edge_label(const StepOutput& out, Var vertex_vector);
  Var edge_reverse(const StepOutput& out, Var vertex_vector, int label_id);

  // Negative log-likelihood of the gold action at this state.
  Var step_loss(const DecoderState& state, const Action& gold);

  // Rewind support for inference tapes.
  std::size_t mark() const { return tape_.size(); }
  void rewind(std::size_t mark);

 private:
  Var maybe_dropout(Var x);
  Var encoder_layer(const Model::EncoderLayer& layer, Var x);
  Var mixture(Var phase, Var new_dist, Var copy_dist, int content_id,
              const std::vector<int>& copy_positions);

  const Model& model_;
  Tape& tape_;
  const AnnotatedSentence& sentence_;
  std::mt19937_64* rng_;
  Var tokens_, lemmas_, embedded_, encoded_;
  std::unordered_map<std::string, Var> unit_cache_;
};

}  // namespace bfamr
