// SPDX-License-Identifier: Apache-2.0
//
// Pointer derivation relation over the reachable part of a program.
//
// Nodes are pointer definitions (owner or raw results and parameters) plus
// field slots keyed by (pointer node, field name). An edge src -> dst states
// that dst is produced from src: assignment (copy), computation (gep, as_raw,
// box_from_raw), ownership transfer (move), memory propagation (store/load and
// field-slot links between pointers to the same object) or inter-procedural
// transfer (argument binding, return).

#ifndef OWNSAN_DERIVATION_H
#define OWNSAN_DERIVATION_H

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ownsan/dataflow.h"
#include "ownsan/ir.h"

namespace ownsan {

struct PointerRef {
  std::string function;
  int def_site = 0; // instruction index, or param_site(i) for parameters
  std::string value;
  auto operator<=>(const PointerRef &) const = default;
};

std::string to_string(const PointerRef &r); // "main:%token@1"

enum class EdgeKind { Assign, Compute, Cast, Rebox, Move, Store, Load, Argument, Return, FieldLink };
const char *edge_kind_name(EdgeKind k);

struct DNode {
  PointerRef ref;            // for field slots: the base pointer's ref
  ValueKind kind = ValueKind::Raw; // field slots: the field's value kind
  bool is_field = false;
  int base = -1;             // field slots: base pointer node
  std::string field;
  bool is_param = false;
  Opcode op = Opcode::Copy;  // defining opcode when !is_param && !is_field
  bool view = false;         // as_raw with a declared count
};

struct DEdge {
  int src = -1;
  int dst = -1;
  EdgeKind kind = EdgeKind::Assign;
  std::string function; // function holding the inducing instruction
  int site = 0;         // inducing instruction index
  bool transfer() const { return kind == EdgeKind::Move; }
  bool interprocedural() const { return kind == EdgeKind::Argument || kind == EdgeKind::Return; }
};

class DerivationGraph {
 public:
  DerivationGraph(const Program &p, const std::set<std::string> &reachable);

  const Program &program() const { return *p_; }
  const std::set<std::string> &reachable() const { return reachable_; }
  const std::vector<DNode> &nodes() const { return nodes_; }
  const std::vector<DEdge> &edges() const { return edges_; }
  const std::vector<int> &out_edges(int n) const { return out_[n]; }
  const std::vector<int> &in_edges(int n) const { return in_[n]; }

  std::optional<int> node_of(const PointerRef &r) const;
  // Field slot of a pointer node, if any edge touches it.
  std::optional<int> field_node(int base, const std::string &field) const;

  // Nodes of the definitions of `var` that may reach instruction `index`.
  std::vector<int> operand_nodes(const std::string &fn, size_t index, const std::string &var) const;
  const ReachingDefs &reaching(const std::string &fn) const { return rd_.at(fn); }

  // Indirect-call targets considered at an icall site: reachable address-taken
  // functions with an identical signature.
  const std::set<std::string> &icall_targets(const std::string &fn, size_t index) const;

  bool is_pointer(int n) const { return !nodes_[n].is_field; }

 private:
  const Program *p_;
  std::set<std::string> reachable_;
  std::vector<DNode> nodes_;
  std::vector<DEdge> edges_;
  std::vector<std::vector<int>> out_, in_;
  std::map<PointerRef, int> by_ref_;
  std::map<std::pair<int, std::string>, int> fields_;
  std::map<std::string, ReachingDefs> rd_;
  std::map<std::pair<std::string, size_t>, std::set<std::string>> icall_targets_;
  std::set<std::tuple<int, int, int>> edge_keys_;
  std::map<std::string, ValueKind> field_kinds_; // pointer-kind fields only

  int add_node(DNode n);
  int slot(int base, const std::string &field);
  void add_edge(int src, int dst, EdgeKind k, const std::string &fn, int site);
};

} // namespace ownsan

#endif // OWNSAN_DERIVATION_H
