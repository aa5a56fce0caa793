#include "evnet/snetkat.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace evnet {

namespace {
constexpr int kStarCap = 64;
}

std::string state_str(const StateVec& k) {
  std::string out = "[";
  for (size_t i = 0; i < k.size(); ++i) out += (i ? "," : "") + std::to_string(k[i]);
  return out + "]";
}

TestPtr Test::mk_true() { return std::make_shared<Test>(Test{Kind::True}); }
TestPtr Test::mk_false() { return std::make_shared<Test>(Test{Kind::False}); }
TestPtr Test::field_eq(FieldId f, Value v) {
  Test t{Kind::FieldEq};
  t.field = f;
  t.value = v;
  return std::make_shared<Test>(t);
}
TestPtr Test::pt_eq(Value v) {
  Test t{Kind::PtEq};
  t.value = v;
  return std::make_shared<Test>(t);
}
TestPtr Test::sw_eq(Value v) {
  Test t{Kind::SwEq};
  t.value = v;
  return std::make_shared<Test>(t);
}
TestPtr Test::state_eq(uint32_t idx, Value v) {
  Test t{Kind::StateEq};
  t.index = idx;
  t.value = v;
  return std::make_shared<Test>(t);
}
TestPtr Test::negate(TestPtr a) {
  Test t{Kind::Not};
  t.a = std::move(a);
  return std::make_shared<Test>(t);
}
TestPtr Test::conj(TestPtr a, TestPtr b) {
  Test t{Kind::And};
  t.a = std::move(a);
  t.b = std::move(b);
  return std::make_shared<Test>(t);
}
TestPtr Test::disj(TestPtr a, TestPtr b) {
  Test t{Kind::Or};
  t.a = std::move(a);
  t.b = std::move(b);
  return std::make_shared<Test>(t);
}

CmdPtr Cmd::test_c(TestPtr t) {
  Cmd c{Kind::TestC};
  c.test = std::move(t);
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::assign_field(FieldId f, Value v) {
  Cmd c{Kind::AssignField};
  c.field = f;
  c.value = v;
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::assign_pt(Value v) {
  Cmd c{Kind::AssignPt};
  c.value = v;
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::seq(CmdPtr a, CmdPtr b) {
  Cmd c{Kind::Seq};
  c.a = std::move(a);
  c.b = std::move(b);
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::uni(CmdPtr a, CmdPtr b) {
  Cmd c{Kind::Union};
  c.a = std::move(a);
  c.b = std::move(b);
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::star(CmdPtr a) {
  Cmd c{Kind::Star};
  c.a = std::move(a);
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::link(Location s, Location d, int pos) {
  Cmd c{Kind::Link};
  c.lsrc = s;
  c.ldst = d;
  c.pos = pos;
  return std::make_shared<Cmd>(c);
}
CmdPtr Cmd::link_state(Location s, Location d, uint32_t m, Value n, int pos) {
  Cmd c{Kind::LinkState};
  c.lsrc = s;
  c.ldst = d;
  c.st_index = m;
  c.st_value = n;
  c.pos = pos;
  return std::make_shared<Cmd>(c);
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

namespace {

enum class Tok {
  Ident, Num, LPar, RPar, LBrack, RBrack, LAngle, RAngle, Colon, Semi,
  Plus, Star, Amp, Pipe, Bang, Eq, Neq, LinkArrow, AssignArrow, Comma, End
};

struct Token {
  Tok kind;
  std::string text;
  Value num = 0;
  int line = 1, col = 1;
};

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto err = [&](const std::string& msg) {
    throw ParseError("syntax error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++col;
      ++i;
      continue;
    }
    if (c == '#') {  // comment to end of line
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    auto two = [&](char a, char b) { return c == a && i + 1 < text.size() && text[i + 1] == b; };
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      t.kind = Tok::Num;
      t.text = text.substr(i, j - i);
      t.num = std::stoull(t.text);
      col += static_cast<int>(j - i);
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = text.substr(i, j - i);
      col += static_cast<int>(j - i);
      i = j;
    } else if (two('<', '-')) {
      t.kind = Tok::AssignArrow;
      i += 2;
      col += 2;
    } else if (two('-', '>')) {
      t.kind = Tok::LinkArrow;
      i += 2;
      col += 2;
    } else if (two('!', '=')) {
      t.kind = Tok::Neq;
      i += 2;
      col += 2;
    } else {
      switch (c) {
        case '(': t.kind = Tok::LPar; break;
        case ')': t.kind = Tok::RPar; break;
        case '[': t.kind = Tok::LBrack; break;
        case ']': t.kind = Tok::RBrack; break;
        case '<': t.kind = Tok::LAngle; break;
        case '>': t.kind = Tok::RAngle; break;
        case ':': t.kind = Tok::Colon; break;
        case ';': t.kind = Tok::Semi; break;
        case '+': t.kind = Tok::Plus; break;
        case '*': t.kind = Tok::Star; break;
        case '&': t.kind = Tok::Amp; break;
        case '|': t.kind = Tok::Pipe; break;
        case '!': t.kind = Tok::Bang; break;
        case '=': t.kind = Tok::Eq; break;
        case ',': t.kind = Tok::Comma; break;
        default: err(std::string("unexpected character '") + c + "'");
      }
      ++i;
      ++col;
    }
    out.push_back(std::move(t));
  }
  out.push_back(Token{Tok::End, "", 0, line, col});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const Topology& topo) : toks_(std::move(toks)), topo_(topo) {}

  CmdPtr parse() {
    CmdPtr c = parse_union();
    expect(Tok::End, "end of input");
    return c;
  }
  int link_positions() const { return next_pos_ - 1; }

 private:
  std::vector<Token> toks_;
  const Topology& topo_;
  size_t i_ = 0;
  int next_pos_ = 1;

  const Token& cur() const { return toks_[i_]; }
  const Token& peek(size_t n = 1) const { return toks_[std::min(i_ + n, toks_.size() - 1)]; }
  Token take() { return toks_[i_++]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool eat(Tok k) {
    if (!at(k)) return false;
    ++i_;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("syntax error at " + std::to_string(cur().line) + ":" +
                     std::to_string(cur().col) + ": " + msg);
  }
  void expect(Tok k, const std::string& what) {
    if (!eat(k)) fail("expected " + what);
  }

  Value parse_value() {
    if (at(Tok::Num)) return take().num;
    if (at(Tok::Ident)) return topo_.resolve_value(take().text);
    fail("expected a numeric value or host name");
  }

  TestPtr as_test(const CmdPtr& c, const char* op) {
    if (c->kind != Cmd::Kind::TestC) fail(std::string("operand of '") + op + "' must be a test");
    return c->test;
  }

  CmdPtr parse_union() {
    CmdPtr c = parse_seq();
    while (eat(Tok::Plus)) c = Cmd::uni(c, parse_seq());
    return c;
  }

  CmdPtr parse_seq() {
    CmdPtr c = parse_star();
    while (eat(Tok::Semi)) c = Cmd::seq(c, parse_star());
    return c;
  }

  CmdPtr parse_star() {
    CmdPtr c = parse_or();
    while (eat(Tok::Star)) c = Cmd::star(c);
    return c;
  }

  CmdPtr parse_or() {
    CmdPtr c = parse_and();
    while (eat(Tok::Pipe)) {
      auto lhs = as_test(c, "|");
      c = Cmd::test_c(Test::disj(lhs, as_test(parse_and(), "|")));
    }
    return c;
  }

  CmdPtr parse_and() {
    CmdPtr c = parse_not();
    while (eat(Tok::Amp)) {
      auto lhs = as_test(c, "&");
      c = Cmd::test_c(Test::conj(lhs, as_test(parse_not(), "&")));
    }
    return c;
  }

  CmdPtr parse_not() {
    if (eat(Tok::Bang)) return Cmd::test_c(Test::negate(as_test(parse_not(), "!")));
    return parse_atom();
  }

  CmdPtr parse_atom() {
    if (at(Tok::LPar)) {
      // A '(' followed by num ':' begins a link endpoint.
      if (peek(1).kind == Tok::Num && peek(2).kind == Tok::Colon) return parse_link();
      take();
      CmdPtr c = parse_union();
      expect(Tok::RPar, "')'");
      return c;
    }
    if (!at(Tok::Ident)) fail("expected a test, assignment, link or '('");
    Token id = take();
    if (id.text == "true") return Cmd::test_c(Test::mk_true());
    if (id.text == "false") return Cmd::test_c(Test::mk_false());
    if (id.text == "state") return parse_state_test();
    if (id.text == "pt") {
      if (eat(Tok::Eq)) return Cmd::test_c(Test::pt_eq(parse_value()));
      if (eat(Tok::Neq)) return Cmd::test_c(Test::negate(Test::pt_eq(parse_value())));
      if (eat(Tok::AssignArrow)) return Cmd::assign_pt(parse_value());
      fail("expected '=', '!=' or '<-' after 'pt'");
    }
    if (id.text == "sw") {
      if (eat(Tok::Eq)) return Cmd::test_c(Test::sw_eq(parse_value()));
      if (eat(Tok::Neq)) return Cmd::test_c(Test::negate(Test::sw_eq(parse_value())));
      fail("switch location is not assignable");
    }
    auto fid = topo_.field_id(id.text);
    if (!fid)
      throw ParseError("syntax error at " + std::to_string(id.line) + ":" + std::to_string(id.col) +
                       ": undeclared field '" + id.text + "'");
    if (eat(Tok::Eq)) return Cmd::test_c(Test::field_eq(*fid, parse_value()));
    if (eat(Tok::Neq)) return Cmd::test_c(Test::negate(Test::field_eq(*fid, parse_value())));
    if (eat(Tok::AssignArrow)) return Cmd::assign_field(*fid, parse_value());
    fail("expected '=', '!=' or '<-' after field '" + id.text + "'");
  }

  CmdPtr parse_state_test() {
    if (eat(Tok::LPar)) {
      if (!at(Tok::Num)) fail("expected state index");
      uint32_t idx = static_cast<uint32_t>(take().num);
      expect(Tok::RPar, "')'");
      if (eat(Tok::Eq)) return Cmd::test_c(Test::state_eq(idx, parse_value()));
      if (eat(Tok::Neq)) return Cmd::test_c(Test::negate(Test::state_eq(idx, parse_value())));
      if (at(Tok::AssignArrow)) fail("state assignment is only allowed inside a link annotation");
      fail("expected '=' or '!=' after state index");
    }
    bool negated = false;
    if (eat(Tok::Neq))
      negated = true;
    else
      expect(Tok::Eq, "'=' or '!=' after 'state'");
    expect(Tok::LBrack, "'['");
    TestPtr t;
    uint32_t idx = 0;
    do {
      if (!at(Tok::Num) && !at(Tok::Ident)) fail("expected state value");
      TestPtr one = Test::state_eq(idx++, parse_value());
      t = t ? Test::conj(t, one) : one;
    } while (eat(Tok::Comma));
    expect(Tok::RBrack, "']'");
    if (negated) t = Test::negate(t);
    return Cmd::test_c(t);
  }

  Location parse_endpoint() {
    expect(Tok::LPar, "'('");
    if (!at(Tok::Num)) fail("expected switch id");
    SwitchId sw = static_cast<SwitchId>(take().num);
    expect(Tok::Colon, "':'");
    if (!at(Tok::Num)) fail("expected port id");
    PortId pt = static_cast<PortId>(take().num);
    expect(Tok::RPar, "')'");
    return Location{sw, pt};
  }

  CmdPtr parse_link() {
    Location src = parse_endpoint();
    expect(Tok::LinkArrow, "'->'");
    Location dst = parse_endpoint();
    int pos = next_pos_++;
    if (!eat(Tok::LAngle)) return Cmd::link(src, dst, pos);
    if (!at(Tok::Ident) || take().text != "state") fail("expected 'state' in link annotation");
    uint32_t idx = 0;
    Value val = 0;
    if (eat(Tok::LPar)) {
      if (!at(Tok::Num)) fail("expected state index");
      idx = static_cast<uint32_t>(take().num);
      expect(Tok::RPar, "')'");
      expect(Tok::AssignArrow, "'<-'");
      val = parse_value();
    } else {
      expect(Tok::AssignArrow, "'<-'");
      expect(Tok::LBrack, "'['");
      val = parse_value();
      expect(Tok::RBrack, "']'");
    }
    expect(Tok::RAngle, "'>'");
    return Cmd::link_state(src, dst, idx, val, pos);
  }
};

void scan_state(const TestPtr& t, size_t& len, std::vector<std::set<Value>>& vals) {
  if (!t) return;
  if (t->kind == Test::Kind::StateEq) {
    len = std::max(len, static_cast<size_t>(t->index) + 1);
    if (vals.size() < len) vals.resize(len);
    vals[t->index].insert(t->value);
  }
  scan_state(t->a, len, vals);
  scan_state(t->b, len, vals);
}

void scan_state(const CmdPtr& c, size_t& len, std::vector<std::set<Value>>& vals) {
  if (!c) return;
  scan_state(c->test, len, vals);
  if (c->kind == Cmd::Kind::LinkState) {
    len = std::max(len, static_cast<size_t>(c->st_index) + 1);
    if (vals.size() < len) vals.resize(len);
    vals[c->st_index].insert(c->st_value);
  }
  scan_state(c->a, len, vals);
  scan_state(c->b, len, vals);
}

}  // namespace

Program parse_program(const std::string& text, const Topology& topo) {
  Parser parser(lex(text), topo);
  Program p;
  p.root = parser.parse();
  scan_state(p.root, p.state_len, p.state_values);
  p.state_values.resize(p.state_len);
  return p;
}

Program load_program(const std::string& path, const Topology& topo) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open program file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_program(ss.str(), topo);
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

namespace {

std::string print_test(const TestPtr& t, const Topology& topo) {
  switch (t->kind) {
    case Test::Kind::True: return "true";
    case Test::Kind::False: return "false";
    case Test::Kind::FieldEq:
      return topo.field_name(t->field) + "=" + std::to_string(t->value);
    case Test::Kind::PtEq: return "pt=" + std::to_string(t->value);
    case Test::Kind::SwEq: return "sw=" + std::to_string(t->value);
    case Test::Kind::StateEq:
      return "state(" + std::to_string(t->index) + ")=" + std::to_string(t->value);
    case Test::Kind::And:
      return "(" + print_test(t->a, topo) + " & " + print_test(t->b, topo) + ")";
    case Test::Kind::Or:
      return "(" + print_test(t->a, topo) + " | " + print_test(t->b, topo) + ")";
    case Test::Kind::Not: return "!(" + print_test(t->a, topo) + ")";
  }
  return "?";
}

std::string print_cmd(const CmdPtr& c, const Topology& topo) {
  switch (c->kind) {
    case Cmd::Kind::TestC: return print_test(c->test, topo);
    case Cmd::Kind::AssignField:
      return topo.field_name(c->field) + "<-" + std::to_string(c->value);
    case Cmd::Kind::AssignPt: return "pt<-" + std::to_string(c->value);
    case Cmd::Kind::Union:
      return "(" + print_cmd(c->a, topo) + " + " + print_cmd(c->b, topo) + ")";
    case Cmd::Kind::Seq:
      return "(" + print_cmd(c->a, topo) + "; " + print_cmd(c->b, topo) + ")";
    case Cmd::Kind::Star: return "(" + print_cmd(c->a, topo) + ")*";
    case Cmd::Kind::Link: return "(" + c->lsrc.str() + ")->(" + c->ldst.str() + ")";
    case Cmd::Kind::LinkState:
      return "(" + c->lsrc.str() + ")->(" + c->ldst.str() + ")<state(" +
             std::to_string(c->st_index) + ")<-" + std::to_string(c->st_value) + ">";
  }
  return "?";
}

}  // namespace

std::string print_program(const Program& p, const Topology& topo) { return print_cmd(p.root, topo); }

// ---------------------------------------------------------------------------
// Configuration projection
// ---------------------------------------------------------------------------

namespace {

TestPtr project_test(const TestPtr& t, const StateVec& k) {
  switch (t->kind) {
    case Test::Kind::StateEq:
      if (t->index >= k.size())
        throw SemanticError("state index " + std::to_string(t->index) + " out of range for vector " +
                            state_str(k));
      return k[t->index] == t->value ? Test::mk_true() : Test::mk_false();
    case Test::Kind::And: return Test::conj(project_test(t->a, k), project_test(t->b, k));
    case Test::Kind::Or: return Test::disj(project_test(t->a, k), project_test(t->b, k));
    case Test::Kind::Not: return Test::negate(project_test(t->a, k));
    default: return t;
  }
}

CmdPtr project_cmd(const CmdPtr& c, const StateVec& k) {
  switch (c->kind) {
    case Cmd::Kind::TestC: return Cmd::test_c(project_test(c->test, k));
    case Cmd::Kind::AssignField:
    case Cmd::Kind::AssignPt:
    case Cmd::Kind::Link: return c;
    case Cmd::Kind::Union: return Cmd::uni(project_cmd(c->a, k), project_cmd(c->b, k));
    case Cmd::Kind::Seq: return Cmd::seq(project_cmd(c->a, k), project_cmd(c->b, k));
    case Cmd::Kind::Star: return Cmd::star(project_cmd(c->a, k));
    case Cmd::Kind::LinkState: return Cmd::link(c->lsrc, c->ldst, c->pos);
  }
  return c;
}

}  // namespace

Program project_config(const Program& p, const StateVec& k) {
  if (k.size() < p.state_len)
    throw SemanticError("state vector " + state_str(k) + " does not cover all state indices");
  Program out;
  out.root = project_cmd(p.root, k);
  return out;
}

bool mentions_state(const TestPtr& t) {
  if (!t) return false;
  if (t->kind == Test::Kind::StateEq) return true;
  return mentions_state(t->a) || mentions_state(t->b);
}

bool mentions_state(const CmdPtr& c) {
  if (!c) return false;
  if (c->kind == Cmd::Kind::LinkState) return true;
  if (mentions_state(c->test)) return true;
  return mentions_state(c->a) || mentions_state(c->b);
}

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

namespace {

struct EvalItem {
  Packet pkt;
  Location loc;
  std::vector<LocatedPacket> trail;
  auto operator<=>(const EvalItem&) const = default;
};

using EvalSet = std::set<EvalItem>;

bool eval_test(const TestPtr& t, const Packet& pkt, Location loc) {
  switch (t->kind) {
    case Test::Kind::True: return true;
    case Test::Kind::False: return false;
    case Test::Kind::FieldEq: {
      auto v = pkt.get(t->field);
      return v.has_value() && *v == t->value;
    }
    case Test::Kind::PtEq: return loc.pt == t->value;
    case Test::Kind::SwEq: return loc.sw == t->value;
    case Test::Kind::StateEq: throw SemanticError("state test in state-free policy");
    case Test::Kind::And: return eval_test(t->a, pkt, loc) && eval_test(t->b, pkt, loc);
    case Test::Kind::Or: return eval_test(t->a, pkt, loc) || eval_test(t->b, pkt, loc);
    case Test::Kind::Not: return !eval_test(t->a, pkt, loc);
  }
  return false;
}

EvalSet eval_cmd(const CmdPtr& c, const EvalSet& in) {
  EvalSet out;
  switch (c->kind) {
    case Cmd::Kind::TestC:
      for (const auto& it : in)
        if (eval_test(c->test, it.pkt, it.loc)) out.insert(it);
      return out;
    case Cmd::Kind::AssignField:
      for (auto it : in) {
        it.pkt.set(c->field, c->value);
        out.insert(std::move(it));
      }
      return out;
    case Cmd::Kind::AssignPt:
      for (auto it : in) {
        it.loc.pt = static_cast<PortId>(c->value);
        out.insert(std::move(it));
      }
      return out;
    case Cmd::Kind::Union: {
      out = eval_cmd(c->a, in);
      EvalSet rhs = eval_cmd(c->b, in);
      out.insert(rhs.begin(), rhs.end());
      return out;
    }
    case Cmd::Kind::Seq: return eval_cmd(c->b, eval_cmd(c->a, in));
    case Cmd::Kind::Star: {
      // Union of all iterates; items reached again on a later round are
      // already in the accumulator, so the frontier shrinks to empty.
      EvalSet acc = in;
      std::set<std::pair<Packet, Location>> seen;
      for (const auto& it : in) seen.insert({it.pkt, it.loc});
      EvalSet frontier = in;
      for (int round = 0; !frontier.empty(); ++round) {
        if (round >= kStarCap)
          throw SemanticError("star did not reach a fixpoint within " + std::to_string(kStarCap) +
                              " iterations");
        EvalSet produced = eval_cmd(c->a, frontier);
        EvalSet next;
        for (const auto& it : produced) {
          if (seen.insert({it.pkt, it.loc}).second) {
            acc.insert(it);
            next.insert(it);
          }
        }
        frontier = std::move(next);
      }
      return acc;
    }
    case Cmd::Kind::Link:
      for (auto it : in) {
        if (it.loc != c->lsrc) continue;
        it.loc = c->ldst;
        it.trail.push_back(LocatedPacket{it.pkt, it.loc});
        out.insert(std::move(it));
      }
      return out;
    case Cmd::Kind::LinkState: throw SemanticError("state-assigning link in state-free policy");
  }
  return out;
}

}  // namespace

std::vector<EvalResult> eval_policy(const Topology& topo, const Program& p,
                                    const LocatedPacket& lp) {
  if (mentions_state(p.root)) throw SemanticError("eval_policy requires a state-free program");
  if (!topo.has_location(lp.loc)) throw SemanticError("eval_policy: unknown location " + lp.loc.str());
  EvalSet seed{EvalItem{lp.pkt, lp.loc, {lp}}};
  EvalSet fin = eval_cmd(p.root, seed);
  std::set<EvalResult> results;
  for (auto it : fin) {
    LocatedPacket end{it.pkt, it.loc};
    if (it.trail.empty() || !(it.trail.back() == end)) it.trail.push_back(end);
    results.insert(EvalResult{end, std::move(it.trail)});
  }
  return std::vector<EvalResult>(results.begin(), results.end());
}

// ---------------------------------------------------------------------------
// Event-edge extraction
// ---------------------------------------------------------------------------

namespace {

struct Extract {
  std::set<RawEdge> edges;
  std::set<TestConjunction> conjs;
  int dropped = 0;

  void merge(const Extract& o) {
    edges.insert(o.edges.begin(), o.edges.end());
    conjs.insert(o.conjs.begin(), o.conjs.end());
    dropped += o.dropped;
  }
};

// Test extraction only rewrites the running conjunction; `positive` tracks
// negation normal form.
std::set<TestConjunction> extract_test(const TestPtr& t, bool positive, const StateVec& k,
                                       const TestConjunction& phi) {
  switch (t->kind) {
    case Test::Kind::True:
      return positive ? std::set<TestConjunction>{phi} : std::set<TestConjunction>{};
    case Test::Kind::False:
      return positive ? std::set<TestConjunction>{} : std::set<TestConjunction>{phi};
    case Test::Kind::FieldEq: {
      TestConjunction ext = phi;
      ext.add(Literal{t->field, positive ? Rel::Eq : Rel::Ne, t->value});
      if (!ext.satisfiable()) return {};
      return {ext};
    }
    case Test::Kind::PtEq:
    case Test::Kind::SwEq:
      return {phi};  // location tests never constrain event guards
    case Test::Kind::StateEq: {
      if (t->index >= k.size())
        throw SemanticError("state index " + std::to_string(t->index) + " out of range for vector " +
                            state_str(k));
      bool holds = positive ? k[t->index] == t->value : k[t->index] != t->value;
      return holds ? std::set<TestConjunction>{phi} : std::set<TestConjunction>{};
    }
    case Test::Kind::And: {
      if (positive) {  // thread left then right
        std::set<TestConjunction> out;
        for (const auto& psi : extract_test(t->a, true, k, phi)) {
          auto rs = extract_test(t->b, true, k, psi);
          out.insert(rs.begin(), rs.end());
        }
        return out;
      }
      // !(a & b) = !a | !b
      auto out = extract_test(t->a, false, k, phi);
      auto rhs = extract_test(t->b, false, k, phi);
      out.insert(rhs.begin(), rhs.end());
      return out;
    }
    case Test::Kind::Or: {
      if (positive) {
        auto out = extract_test(t->a, true, k, phi);
        auto rhs = extract_test(t->b, true, k, phi);
        out.insert(rhs.begin(), rhs.end());
        return out;
      }
      // !(a | b) = !a & !b
      std::set<TestConjunction> out;
      for (const auto& psi : extract_test(t->a, false, k, phi)) {
        auto rs = extract_test(t->b, false, k, psi);
        out.insert(rs.begin(), rs.end());
      }
      return out;
    }
    case Test::Kind::Not: return extract_test(t->a, !positive, k, phi);
  }
  return {};
}

Extract extract_cmd(const CmdPtr& c, const StateVec& k, const TestConjunction& phi) {
  Extract out;
  if (!phi.satisfiable()) return out;
  switch (c->kind) {
    case Cmd::Kind::TestC:
      out.conjs = extract_test(c->test, true, k, phi);
      return out;
    case Cmd::Kind::AssignField: {
      TestConjunction stripped = phi.without_field(c->field);
      stripped.add(Literal{c->field, Rel::Eq, c->value});
      if (stripped.satisfiable()) out.conjs.insert(stripped);
      return out;
    }
    case Cmd::Kind::AssignPt:
      out.conjs.insert(phi);  // port writes never reach event guards
      return out;
    case Cmd::Kind::Union: {
      out = extract_cmd(c->a, k, phi);
      out.merge(extract_cmd(c->b, k, phi));
      return out;
    }
    case Cmd::Kind::Seq: {
      Extract lhs = extract_cmd(c->a, k, phi);
      out.edges = std::move(lhs.edges);
      out.dropped = lhs.dropped;
      for (const auto& psi : lhs.conjs) {
        Extract rhs = extract_cmd(c->b, k, psi);
        out.edges.insert(rhs.edges.begin(), rhs.edges.end());
        out.conjs.insert(rhs.conjs.begin(), rhs.conjs.end());
        out.dropped += rhs.dropped;
      }
      return out;
    }
    case Cmd::Kind::Star: {
      out.conjs.insert(phi);
      std::set<TestConjunction> frontier{phi};
      for (int round = 0; !frontier.empty(); ++round) {
        if (round >= kStarCap)
          throw SemanticError("edge extraction: star did not stabilize within " +
                              std::to_string(kStarCap) + " iterations");
        std::set<TestConjunction> next;
        for (const auto& psi : frontier) {
          Extract it = extract_cmd(c->a, k, psi);
          out.edges.insert(it.edges.begin(), it.edges.end());
          out.dropped += it.dropped;
          for (const auto& chi : it.conjs)
            if (out.conjs.insert(chi).second) next.insert(chi);
        }
        frontier = std::move(next);
      }
      return out;
    }
    case Cmd::Kind::Link:
      out.conjs.insert(phi);
      return out;
    case Cmd::Kind::LinkState: {
      if (c->st_index >= k.size())
        throw SemanticError("state index " + std::to_string(c->st_index) +
                            " out of range for vector " + state_str(k));
      StateVec dst = k;
      dst[c->st_index] = c->st_value;
      if (dst == k) {
        ++out.dropped;  // identity edge: no state change
      } else {
        out.edges.insert(RawEdge{k, phi, c->ldst, c->st_index, c->st_value, c->pos});
      }
      out.conjs.insert(phi);
      return out;
    }
  }
  return out;
}

}  // namespace

ExtractResult extract_edges(const Program& p, const StateVec& k, const TestConjunction& phi) {
  if (!phi.satisfiable()) throw SemanticError("extract_edges: seed conjunction is unsatisfiable");
  if (k.size() < p.state_len)
    throw SemanticError("state vector " + state_str(k) + " does not cover all state indices");
  Extract raw = extract_cmd(p.root, k, phi);
  ExtractResult out;
  out.edges.assign(raw.edges.begin(), raw.edges.end());
  out.conjs = std::move(raw.conjs);
  out.dropped_self_loops = raw.dropped;
  return out;
}

StateVec initial_state(const Program& p) { return StateVec(p.state_len, 0); }

StateSpace state_space(const Program& p, const StateVec& k0) {
  if (k0.size() < p.state_len)
    throw SemanticError("initial state " + state_str(k0) + " does not cover all state indices");
  const size_t len = k0.size();
  std::vector<std::set<Value>> values(len);
  for (size_t i = 0; i < len; ++i) {
    if (i < p.state_values.size()) values[i] = p.state_values[i];
    values[i].insert(k0[i]);
  }
  StateSpace out;
  size_t total = 1;
  for (const auto& vs : values) {
    total *= vs.size();
    if (total > 200000) throw SemanticError("state space exceeds 200000 vectors");
  }
  std::vector<std::vector<Value>> ordered(len);
  for (size_t i = 0; i < len; ++i) ordered[i].assign(values[i].begin(), values[i].end());
  StateVec cur(len, 0);
  std::vector<size_t> idx(len, 0);
  while (true) {
    for (size_t i = 0; i < len; ++i) cur[i] = ordered[i][idx[i]];
    out.all.push_back(cur);
    size_t i = len;
    while (i > 0 && ++idx[i - 1] == ordered[i - 1].size()) idx[--i] = 0;
    if (i == 0) break;  // odometer wrapped (also exits immediately when len == 0)
  }
  std::sort(out.all.begin(), out.all.end());

  std::set<StateVec> seen{k0};
  std::vector<StateVec> work{k0};
  TestConjunction top;
  while (!work.empty()) {
    StateVec k = work.back();
    work.pop_back();
    for (const auto& e : extract_edges(p, k, top).edges) {
      StateVec dst = e.src;
      dst[e.st_index] = e.st_value;
      if (seen.insert(dst).second) work.push_back(dst);
    }
  }
  out.reachable.assign(seen.begin(), seen.end());
  return out;
}

}  // namespace evnet
