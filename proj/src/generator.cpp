// SPDX-License-Identifier: Apache-2.0

#include "ownsan/generator.h"

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "ownsan/ir.h"
#include "ownsan/text.h"

namespace ownsan {

namespace {

struct Sig {
  std::vector<ValueKind> params;
  ValueKind ret;
};

const Sig kSigs[] = {
    {{ValueKind::Raw, ValueKind::Owner}, ValueKind::Raw},
    {{ValueKind::Raw}, ValueKind::Raw},
    {{ValueKind::Owner}, ValueKind::Owner},
    {{ValueKind::Raw}, ValueKind::Scalar},
};

const char *kFields[] = {"p0", "p1"};
const char *kUnchecked[] = {"add", "sub", "mul", "neg", "shl", "shr"};

struct Helper {
  std::string name;
  int sig = 0;
};

// Live values by kind. Branch arms work on a copy that is discarded at the
// join, so every pooled value is defined on all paths.
struct Scope {
  std::vector<std::string> owners, raws, scalars;
  std::set<std::pair<std::string, std::string>> stored; // (owner, field)
};

class Gen {
 public:
  Gen(uint64_t seed, size_t size) : rng_(seed * 0x9E3779B97F4A7C15ull ^ (size + 1)), size_(size) {}

  std::string run() {
    std::string text;
    size_t nhelpers = size_ >= 8 ? below(4) : 0;
    for (size_t k = 0; k < nhelpers; ++k)
      helpers_.push_back({"h" + std::to_string(k), static_cast<int>(below(std::size(kSigs)))});

    std::vector<std::string> bodies;
    for (size_t k = 0; k < helpers_.size(); ++k)
      bodies.push_back(helper(k));
    text += function_main();
    for (const auto &b : bodies)
      text += "\n" + b;
    return text;
  }

 private:
  std::mt19937_64 rng_;
  size_t size_;
  std::vector<Helper> helpers_;
  size_t callable_ = 0; // helpers below this index may be called
  std::vector<std::string> out_;
  Scope scope_;
  int next_value_ = 0;
  int next_label_ = 0;
  size_t emitted_ = 0;

  size_t below(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng_); }
  int64_t range(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(rng_);
  }
  bool chance(int pct) { return static_cast<int>(below(100)) < pct; }
  template <typename T> const T &pick(const std::vector<T> &v) { return v[below(v.size())]; }

  std::string fresh() { return "v" + std::to_string(next_value_++); }
  std::string label() { return "L" + std::to_string(next_label_++); }
  void emit(const std::string &s) {
    out_.push_back("  " + s);
    ++emitted_;
  }
  void place(const std::string &l) { out_.push_back(l + ":"); }

  void reset() {
    out_.clear();
    scope_ = {};
    next_value_ = 0;
    next_label_ = 0;
    emitted_ = 0;
  }

  std::string body_text(const std::string &header) {
    std::string s = header + " {\n";
    for (const auto &l : out_)
      s += l + "\n";
    return s + "}\n";
  }

  std::string pointer() {
    bool raw = !scope_.raws.empty() && (scope_.owners.empty() || chance(55));
    return raw ? pick(scope_.raws) : pick(scope_.owners);
  }
  bool is_raw(const std::string &v) const {
    return std::find(scope_.raws.begin(), scope_.raws.end(), v) != scope_.raws.end();
  }
  std::string scalar() {
    if (scope_.scalars.empty() || chance(30))
      return std::to_string(range(-1, 6));
    return "%" + pick(scope_.scalars);
  }
  std::string unsafe_if(bool raw, int pct) { return raw && chance(pct) ? " !unsafe" : ""; }
  void forget_owner(const std::string &o) {
    std::erase(scope_.owners, o);
    std::erase_if(scope_.stored, [&](const auto &s) { return s.first == o; });
  }

  // Value of `kind` from the pool, minting one if the pool is empty.
  std::string value_of_kind(ValueKind kind) {
    auto &pool = kind == ValueKind::Owner ? scope_.owners
                 : kind == ValueKind::Raw ? scope_.raws
                                          : scope_.scalars;
    if (!pool.empty())
      return pick(pool);
    std::string v = fresh();
    if (kind == ValueKind::Owner)
      emit("%" + v + " = heap_alloc " + std::to_string(range(1, 6)));
    else if (kind == ValueKind::Raw)
      emit("%" + v + " = raw_alloc " + std::to_string(range(1, 6)));
    else
      emit("%" + v + " = copy " + std::to_string(range(0, 4)));
    pool.push_back(v);
    return v;
  }

  void define(ValueKind kind, const std::string &v) {
    if (kind == ValueKind::Owner)
      scope_.owners.push_back(v);
    else if (kind == ValueKind::Raw)
      scope_.raws.push_back(v);
    else if (kind == ValueKind::Scalar)
      scope_.scalars.push_back(v);
  }

  void call_helper() {
    const Helper &h = helpers_[below(callable_)];
    const Sig &sig = kSigs[h.sig];
    std::string args;
    for (size_t k = 0; k < sig.params.size(); ++k)
      args += (k ? ", %" : "%") + value_of_kind(sig.params[k]);
    if (chance(50)) {
      std::string r = fresh();
      emit("%" + r + " = call " + h.name + "(" + args + ")");
      define(sig.ret, r);
    } else {
      std::string fp = fresh(), r = fresh();
      emit("%" + fp + " = copy @" + h.name);
      std::string s = "sig(";
      for (size_t k = 0; k < sig.params.size(); ++k)
        s += (k ? "," : "") + std::string(kind_name(sig.params[k]));
      s += std::string("->") + kind_name(sig.ret) + ")";
      emit("%" + r + " = icall %" + fp + "(" + args + ") " + s);
      define(sig.ret, r);
    }
  }

  void block(size_t budget, int depth) {
    size_t stop = emitted_ + budget;
    while (emitted_ < stop)
      step(depth, stop - emitted_);
  }

  void step(int depth, size_t left) {
    const bool have_ptr = !scope_.owners.empty() || !scope_.raws.empty();
    switch (below(20)) {
    case 0:
    case 1: {
      std::string v = fresh();
      switch (below(5)) {
      case 0:
        emit("%" + v + " = heap_alloc " + std::to_string(range(1, 8)));
        scope_.owners.push_back(v);
        break;
      case 1:
        emit("%" + v + " = heap_alloc_uninit " + std::to_string(range(1, 8)));
        scope_.owners.push_back(v);
        break;
      case 2: {
        int64_t cap = range(1, 8);
        emit("%" + v + " = vec_new " + std::to_string(cap) + ", " + std::to_string(range(0, cap)));
        scope_.owners.push_back(v);
        break;
      }
      case 3:
        emit("%" + v + " = raw_alloc " + std::to_string(range(1, 8)));
        scope_.raws.push_back(v);
        break;
      default:
        emit("%" + v + " = null");
        scope_.raws.push_back(v);
        break;
      }
      return;
    }
    case 2:
    case 3:
      if (have_ptr) {
        std::string p = pointer(), r = fresh();
        std::string count = chance(25) ? " count " + std::to_string(range(1, 4)) : "";
        emit("%" + r + " = as_raw %" + p + count + unsafe_if(true, 10));
        scope_.raws.push_back(r);
        return;
      }
      break;
    case 4:
      if (have_ptr) {
        std::string p = pointer();
        bool raw = is_raw(p);
        if (raw && chance(25)) {
          emit("%" + p + " = gep %" + p + ", " + scalar());
          return;
        }
        std::string r = fresh();
        emit("%" + r + " = gep %" + p + ", " + scalar());
        define(raw ? ValueKind::Raw : ValueKind::Owner, r);
        return;
      }
      break;
    case 5:
      if (have_ptr) {
        std::string p = pointer(), r = fresh();
        bool raw = is_raw(p);
        emit("%" + r + " = copy %" + p + unsafe_if(raw, 20));
        define(raw ? ValueKind::Raw : ValueKind::Owner, r);
        return;
      }
      break;
    case 6:
      if (!scope_.owners.empty() && !scope_.raws.empty()) {
        std::string o = pick(scope_.owners), r = pick(scope_.raws);
        std::string f = kFields[below(2)];
        emit("store_field %" + o + "." + f + ", %" + r + unsafe_if(true, 15));
        scope_.stored.insert({o, f});
        return;
      }
      break;
    case 7:
      if (!scope_.stored.empty()) {
        auto it = scope_.stored.begin();
        std::advance(it, below(scope_.stored.size()));
        std::string r = fresh();
        emit("%" + r + " = load_field %" + it->first + "." + it->second + " as raw" +
             unsafe_if(true, 40));
        scope_.raws.push_back(r);
        return;
      }
      break;
    case 8:
      if (!scope_.owners.empty()) {
        std::string o = pick(scope_.owners), r = fresh();
        emit("%" + r + " = move %" + o);
        forget_owner(o);
        scope_.owners.push_back(r);
        return;
      }
      break;
    case 9:
      if (!scope_.owners.empty() && chance(60)) {
        std::string o = pick(scope_.owners);
        static const char *kOps[] = {"drop", "end_scope", "forget"};
        emit(std::string(kOps[below(3)]) + " %" + o);
        forget_owner(o);
        return;
      }
      break;
    case 10:
    case 11:
      if (have_ptr) {
        std::string p = pointer(), s = fresh();
        emit("%" + s + " = deref_read %" + p + unsafe_if(is_raw(p), 60));
        scope_.scalars.push_back(s);
        return;
      }
      break;
    case 12:
      if (have_ptr) {
        std::string p = pointer();
        emit("deref_write %" + p + ", " + scalar() + unsafe_if(is_raw(p), 60));
        return;
      }
      break;
    case 13:
      if (!scope_.raws.empty()) {
        std::string r = pick(scope_.raws), o = fresh();
        emit("%" + o + " = box_from_raw %" + r + " !unsafe");
        scope_.owners.push_back(o);
        return;
      }
      break;
    case 14:
      if (!scope_.owners.empty()) {
        std::string o = pick(scope_.owners);
        switch (below(3)) {
        case 0:
          emit("vec_push %" + o);
          break;
        case 1:
          emit("vec_pop %" + o);
          break;
        default:
          emit("api_set_len %" + o + ", " + scalar() + " !unsafe");
          break;
        }
        return;
      }
      break;
    case 15: {
      std::string s = fresh();
      std::string x = value_of_kind(ValueKind::Scalar);
      emit("%" + s + " = api_unchecked %" + x + ", " + kUnchecked[below(6)] + ", " + scalar() +
           " !unsafe");
      scope_.scalars.push_back(s);
      return;
    }
    case 16:
    case 17:
      if (callable_ > 0) {
        call_helper();
        return;
      }
      break;
    case 18:
      if (depth < 2 && left >= 4) {
        branch(depth, left);
        return;
      }
      break;
    case 19:
      if (depth < 2 && left >= 4) {
        loop(depth, left);
        return;
      }
      break;
    }
    std::string s = fresh();
    emit("%" + s + " = copy " + std::to_string(range(0, 9)));
    scope_.scalars.push_back(s);
  }

  void branch(int depth, size_t left) {
    std::string c = value_of_kind(ValueKind::Scalar);
    std::string then_l = label(), else_l = label(), join_l = label();
    size_t arm = std::max<size_t>(1, std::min<size_t>(left / 3, 6));
    emit("cbr %" + c + ", " + then_l + ", " + else_l);
    Scope saved = scope_;
    place(then_l);
    block(arm, depth + 1);
    emit("br " + join_l);
    scope_ = saved;
    place(else_l);
    block(arm, depth + 1);
    scope_ = saved;
    place(join_l);
  }

  // Bodies run at least once, so their definitions reach the exit. The
  // counter is private to the loop and counts down to zero.
  void loop(int depth, size_t left) {
    std::string c = fresh();
    std::string head = label(), exit = label();
    size_t body = std::max<size_t>(1, std::min<size_t>(left / 2, 6));
    emit("%" + c + " = copy " + std::to_string(range(1, 3)));
    place(head);
    Scope saved = scope_;
    block(body, depth + 1);
    scope_.stored = saved.stored;
    emit("%" + c + " = api_unchecked %" + c + ", sub, 1 !unsafe");
    emit("cbr %" + c + ", " + head + ", " + exit);
    place(exit);
  }

  std::string helper(size_t k) {
    reset();
    callable_ = k;
    const Sig &sig = kSigs[helpers_[k].sig];
    std::string header = "fn " + helpers_[k].name + "(";
    for (size_t a = 0; a < sig.params.size(); ++a) {
      std::string name = "a" + std::to_string(a);
      header += (a ? ", %" : "%") + name + ": " + kind_name(sig.params[a]);
      define(sig.params[a], name);
    }
    header += std::string(") -> ") + kind_name(sig.ret);
    block(range(2, 6), 1);
    emit("ret %" + value_of_kind(sig.ret));
    return body_text(header);
  }

  std::string function_main() {
    reset();
    callable_ = helpers_.size();
    if (size_ > 0)
      block(size_, 0);
    emit("ret");
    return body_text("fn main() entry");
  }
};

} // namespace

std::string generate_program(uint64_t seed, size_t size) {
  if (size > kMaxGeneratedSize)
    throw Error("generator size " + std::to_string(size) + " exceeds " +
                std::to_string(kMaxGeneratedSize));
  return print_program(parse_program(Gen(seed, size).run()));
}

} // namespace ownsan
