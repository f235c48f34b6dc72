#include "exid/knowledge/dsl.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"

namespace exid::knowledge {
namespace {

enum class Tok { lparen, rparen, op, word, directive, and_, end };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

bool is_word_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != '<' && c != '>' && c != '=' &&
         c != '#' && c != ';' && c != '&';
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
    } else if (c == '#' || c == ';') {
      while (i < text.size() && text[i] != '\n') advance(1);
    } else if (c == '(' || c == ')') {
      out.push_back({c == '(' ? Tok::lparen : Tok::rparen, std::string(1, c), line, col});
      advance(1);
    } else if (c == '<' || c == '>') {
      const bool with_eq = i + 1 < text.size() && text[i + 1] == '=';
      out.push_back({Tok::op, std::string(text.substr(i, with_eq ? 2 : 1)), line, col});
      advance(with_eq ? 2 : 1);
    } else if (c == '&') {
      if (i + 1 >= text.size() || text[i + 1] != '&') throw ParseError("expected '&&'", line, col);
      out.push_back({Tok::and_, "&&", line, col});
      advance(2);
    } else if (c == '=') {
      throw ParseError("unexpected '=' (equality tests are not supported)", line, col);
    } else {
      const int start_line = line;
      const int start_col = col;
      const std::size_t start = i;
      const bool directive = c == '@';
      if (directive) advance(1);
      while (i < text.size() && is_word_char(text[i])) advance(1);
      std::string word(text.substr(start, i - start));
      if (directive) {
        if (word.size() == 1) throw ParseError("empty directive", start_line, start_col);
        out.push_back({Tok::directive, word.substr(1), start_line, start_col});
      } else if (word == "and") {
        out.push_back({Tok::and_, word, start_line, start_col});
      } else {
        out.push_back({Tok::word, word, start_line, start_col});
      }
    }
  }
  out.push_back({Tok::end, "", line, col});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, Vocabulary vocab) : tokens_(std::move(tokens)), vocab_(std::move(vocab)) {}

  void parse_header() {
    while (peek().kind == Tok::directive) {
      const Token d = take();
      if (d.text == "env") {
        const Token id = expect(Tok::word, "an environment id");
        if (!is_supported_env(id.text)) {
          throw ParseError("unknown environment '" + id.text + "'", id.line, id.column);
        }
        vocab_ = Vocabulary::for_env(env_spec(id.text));
      } else if (d.text == "feature") {
        const Token name = expect(Tok::word, "a feature name");
        const int index = parse_index(expect(Tok::word, "a feature index"));
        if (vocab_.obs_dim > 0 && index >= vocab_.obs_dim) {
          throw ParseError("feature index out of range", name.line, name.column);
        }
        bool replaced = false;
        for (auto& [n, i] : vocab_.features) {
          if (n == name.text) {
            i = index;
            replaced = true;
          }
        }
        if (!replaced) vocab_.features.emplace_back(name.text, index);
      } else if (d.text == "action") {
        const Token name = expect(Tok::word, "an action name");
        const int index = parse_index(expect(Tok::word, "an action index"));
        if (vocab_.n_actions > 0 && index >= vocab_.n_actions) {
          throw ParseError("action index out of range", name.line, name.column);
        }
        if (static_cast<std::size_t>(index) >= vocab_.actions.size()) {
          for (int k = static_cast<int>(vocab_.actions.size()); k <= index; ++k) {
            vocab_.actions.push_back(std::to_string(k));
          }
        }
        vocab_.actions[static_cast<std::size_t>(index)] = name.text;
      } else {
        throw ParseError("unknown directive '@" + d.text + "'", d.line, d.column);
      }
    }
  }

  DecisionTree parse_tree() {
    parse_header();
    Predicate guard;
    if (peek().kind == Tok::lparen && peek(1).kind == Tok::word && peek(1).text == "guard") {
      take();
      take();
      do {
        guard.conditions.push_back(parse_condition());
      } while (peek().kind == Tok::lparen && peek(1).kind == Tok::word && is_feature_start());
      parse_node();
      expect(Tok::rparen, "')' closing guard");
    } else {
      parse_node();
    }
    const Token& t = peek();
    if (t.kind != Tok::end) throw ParseError("unexpected '" + t.text + "' after the tree", t.line, t.column);
    return DecisionTree(vocab_, std::move(guard), std::move(nodes_));
  }

  Predicate parse_predicate() {
    Predicate p;
    p.conditions.push_back(parse_condition_loose());
    while (peek().kind == Tok::and_) {
      take();
      p.conditions.push_back(parse_condition_loose());
    }
    const Token& t = peek();
    if (t.kind != Tok::end) throw ParseError("unexpected '" + t.text + "' in predicate", t.line, t.column);
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t k = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[k];
  }
  Token take() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

  Token expect(Tok kind, const std::string& what) {
    const Token t = take();
    if (t.kind != kind) {
      throw ParseError("expected " + what + (t.kind == Tok::end ? " but input ended" : ", found '" + t.text + "'"),
                       t.line, t.column);
    }
    return t;
  }

  static int parse_index(const Token& t) {
    for (char c : t.text) {
      if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("expected a non-negative integer", t.line, t.column);
    }
    return static_cast<int>(parse_int(t.text, t.line));
  }

  // In a guard, distinguishes "(feature op value)" from the tree's "(if ...)" / "(act ...)".
  bool is_feature_start() const {
    const auto& w = peek(1).text;
    return w != "if" && w != "act" && w != "empty" && peek(2).kind == Tok::op;
  }

  Condition parse_condition() {
    expect(Tok::lparen, "'(' starting a condition");
    Condition c = parse_bare_condition();
    expect(Tok::rparen, "')' closing a condition");
    return c;
  }

  Condition parse_condition_loose() {
    if (peek().kind == Tok::lparen) return parse_condition();
    return parse_bare_condition();
  }

  Condition parse_bare_condition() {
    const Token feat = expect(Tok::word, "a feature name");
    const auto index = vocab_.feature_index(feat.text);
    if (!index) {
      throw ParseError("unknown feature '" + feat.text + "'" +
                           (vocab_.env_id.empty() ? std::string() : " for " + vocab_.env_id),
                       feat.line, feat.column);
    }
    const Token op = expect(Tok::op, "a comparator (<, >, <=, >=)");
    const Token num = expect(Tok::word, "a threshold");
    Condition c;
    c.feature = *index;
    c.cmp = op.text == "<"    ? Comparator::less
            : op.text == ">"  ? Comparator::greater
            : op.text == "<=" ? Comparator::less_equal
                              : Comparator::greater_equal;
    try {
      c.threshold = parse_double(num.text, num.line);
    } catch (const ParseError&) {
      throw ParseError("invalid threshold '" + num.text + "'", num.line, num.column);
    }
    return c;
  }

  int parse_node() {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (peek().kind == Tok::word && peek().text == "empty") {
      take();
      return id;
    }
    expect(Tok::lparen, "'(' starting a node");
    const Token head = expect(Tok::word, "'if', 'act' or 'empty'");
    if (head.text == "empty") {
      expect(Tok::rparen, "')'");
    } else if (head.text == "act") {
      const Token name = expect(Tok::word, "an action name");
      const auto action = vocab_.action_index(name.text);
      if (!action) throw ParseError("unknown or out-of-range action '" + name.text + "'", name.line, name.column);
      nodes_[static_cast<std::size_t>(id)].action = *action;
      expect(Tok::rparen, "')' closing act");
    } else if (head.text == "if") {
      const Condition c = parse_condition();
      const int t = parse_node();
      const int f = parse_node();
      auto& node = nodes_[static_cast<std::size_t>(id)];
      node.condition = c;
      node.true_child = t;
      node.false_child = f;
      expect(Tok::rparen, "')' closing if");
    } else {
      throw ParseError("expected 'if', 'act' or 'empty', found '" + head.text + "'", head.line, head.column);
    }
    return id;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Vocabulary vocab_;
  std::vector<TreeNode> nodes_;
};

std::string condition_text(const Condition& c, const Vocabulary& vocab) {
  return "(" + vocab.feature_name(c.feature) + " " + comparator_symbol(c.cmp) + " " + format_double(c.threshold) + ")";
}

void print_node(std::ostringstream& out, const DecisionTree& tree, int id, int indent) {
  const auto& node = tree.nodes()[static_cast<std::size_t>(id)];
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ');
  if (node.is_leaf()) {
    if (node.action) {
      out << "(act " << tree.vocabulary().action_name(*node.action) << ")";
    } else {
      out << "empty";
    }
    return;
  }
  out << "(if " << condition_text(*node.condition, tree.vocabulary()) << "\n";
  print_node(out, tree, node.true_child, indent + 1);
  out << "\n";
  print_node(out, tree, node.false_child, indent + 1);
  out << ")";
}

}  // namespace

DecisionTree parse_tree(std::string_view text, const Vocabulary* defaults) {
  Parser parser(tokenize(text), defaults ? *defaults : Vocabulary{});
  return parser.parse_tree();
}

std::string print_tree(const DecisionTree& tree) {
  std::ostringstream out;
  const auto& v = tree.vocabulary();
  if (!v.env_id.empty()) out << "@env " << v.env_id << "\n";
  // Declare every name explicitly so the text does not depend on built-in defaults.
  for (const auto& [name, index] : v.features) out << "@feature " << name << " " << index << "\n";
  for (std::size_t i = 0; i < v.actions.size(); ++i) out << "@action " << v.actions[i] << " " << i << "\n";
  int indent = 0;
  if (!tree.guard().conditions.empty()) {
    out << "(guard";
    for (const auto& c : tree.guard().conditions) out << " " << condition_text(c, v);
    out << "\n";
    indent = 1;
  }
  print_node(out, tree, 0, indent);
  if (!tree.guard().conditions.empty()) out << ")";
  out << "\n";
  return out.str();
}

Predicate parse_predicate(std::string_view text, const Vocabulary& vocabulary) {
  Parser parser(tokenize(text), vocabulary);
  return parser.parse_predicate();
}

std::string print_predicate(const Predicate& predicate, const Vocabulary& vocabulary) {
  std::string out;
  for (std::size_t i = 0; i < predicate.conditions.size(); ++i) {
    if (i) out += " and ";
    out += condition_text(predicate.conditions[i], vocabulary);
  }
  return out;
}

}  // namespace exid::knowledge
