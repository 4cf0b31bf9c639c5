#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctxf/tensor.hpp"

namespace ctxf::kg {

enum class TermKind { Class, Individual, Property };

// A node or edge label in the knowledge graph. Identifiers are non-empty and
// contain no whitespace, which keeps the tab-separated triple format
// unambiguous.
struct Term {
  TermKind kind;
  std::string id;
  auto operator<=>(const Term&) const = default;
};

Term cls(std::string id);
Term ind(std::string id);
Term prop(std::string id);

struct Triple {
  Term head;      // Class or Individual
  Term relation;  // always Property
  Term tail;      // Class or Individual
  auto operator<=>(const Triple&) const = default;
};

// In-memory triple store. Triples are deduplicated on insertion; class_list
// fixes the canonical ordering of dataset classes used by every downstream
// matrix row.
class KnowledgeGraph {
 public:
  void set_classes(std::vector<std::string> names);
  void add(const Term& head, const std::string& property, const Term& tail);

  const std::vector<std::string>& class_list() const { return class_list_; }
  const std::vector<Triple>& triples() const { return triples_; }

  std::vector<std::string> property_ids() const;  // sorted, distinct
  // Distinct terms of one kind across all triples (relation terms count as
  // Property; heads/tails as their own kinds).
  std::size_t count_terms(TermKind kind) const;
  bool has_property(const std::string& id) const;

  // Checks the structural invariants: classes declared, and every dataset
  // class appears as the head of at least one triple.
  void validate() const;

 private:
  std::vector<std::string> class_list_;
  std::vector<Triple> triples_;
  std::set<Triple> seen_;
};

// ---- triple file format (.kgt) -------------------------------------------------
//
// UTF-8 text; '#' starts a comment line; one mandatory directive line
// "@classes<TAB>name1<TAB>name2..." before any triple; triple lines are
// "head_kind:head_id<TAB>property_id<TAB>tail_kind:tail_id" with kind C or I.
// serialize_kgt emits the canonical form (directive first, then triples in
// sorted order) whose parse/serialize round-trip is byte-exact.

KnowledgeGraph parse_kgt(const std::string& text, const std::string& source_name);
KnowledgeGraph load_kgt(const std::string& path);
std::string serialize_kgt(const KnowledgeGraph& g);
void save_kgt(const std::string& path, const KnowledgeGraph& g);

// ---- view extraction ------------------------------------------------------------

struct ViewSpec {
  std::string name;                  // visual | taxonomical | functional | full
  std::set<std::string> predicates;  // ignored (all) when name == "full"
  bool include_type_closure = false;
};

// The predicate families of the bundled graphs, intersected with the
// properties actually present in g. Errors when the intersection is empty or
// the name is unknown.
ViewSpec standard_view(const std::string& name, const KnowledgeGraph& g);

struct ViewSubgraph {
  std::string view_name;
  std::vector<std::string> class_names;  // parent class_list, defines rows 0..C-1
  std::vector<Triple> triples;
  std::vector<Term> nodes;  // dataset classes first (class_list order), then
                            // remaining endpoints sorted by (kind, id)
  std::map<Term, int> node_index;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  int n_nodes() const { return static_cast<int>(nodes.size()); }
};

// Selects the triples whose relation is in spec.predicates (every triple for
// "full"), then, when include_type_closure is set, transitively pulls in
// "type" triples rooted at already-selected nodes. Dataset classes are always
// nodes, even when isolated in this view.
ViewSubgraph extract_view(const KnowledgeGraph& g, const ViewSpec& spec);

struct AdjacencyData {
  Tensor adjacency;  // (n, n) symmetric 0/1, zero diagonal
  Tensor features;   // (n, n) identity (one-hot per node)
};

// Relation types and edge direction are discarded here: the graph embedders
// consume a plain undirected adjacency with one-hot node features.
AdjacencyData to_adjacency(const ViewSubgraph& s);

}  // namespace ctxf::kg
