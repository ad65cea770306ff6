#include "odp/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <utility>

namespace odp {

bool ParseReport::failed() const {
    return std::ranges::any_of(messages, [](const ParseMessage& m) {
        return m.severity == ParseMessage::Severity::Error;
    });
}

std::vector<ParseMessage> ParseReport::errors() const {
    std::vector<ParseMessage> out;
    for (const ParseMessage& m : messages) {
        if (m.severity == ParseMessage::Severity::Error) out.push_back(m);
    }
    return out;
}

std::optional<SourceSpan> SpanTable::lookup(std::string_view category,
                                            std::string_view name) const {
    auto it = spans.find(std::string(category) + ":" + std::string(name));
    return it == spans.end() ? std::nullopt : std::optional(it->second);
}

void SpanTable::record(std::string_view category, std::string_view name, const SourceSpan& span) {
    spans.emplace(std::string(category) + ":" + std::string(name), span);
}

namespace {

enum class Tok {
    Ident,
    Integer,
    String,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Dot,
    DotDot,
    Arrow,      // ->
    TildeArrow, // ~>
    Assign,     // :=
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourceSpan span;
};

class Lexer {
public:
    Lexer(std::string_view text, std::string file, ParseReport& report)
        : text_(text), file_(std::move(file)), report_(report) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        while (true) {
            skip_trivia();
            if (pos_ >= text_.size()) break;
            tokens.push_back(next_token());
        }
        Token end;
        end.kind = Tok::End;
        end.span = here(0);
        tokens.push_back(end);
        return tokens;
    }

private:
    std::string_view text_;
    std::string file_;
    ParseReport& report_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    SourceSpan here(int width) const {
        SourceSpan span;
        span.file = file_;
        span.start_line = span.end_line = line_;
        span.start_col = col_;
        span.end_col = col_ + (width > 0 ? width - 1 : 0);
        return span;
    }

    void error(const SourceSpan& span, std::string message) {
        report_.messages.push_back(
            {ParseMessage::Severity::Error, span, std::move(message)});
    }

    void skip_trivia() {
        while (pos_ < text_.size()) {
            char c = peek();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (pos_ < text_.size() && peek() != '\n') advance();
            } else if (c == '/' && peek(1) == '*') {
                SourceSpan open = here(2);
                advance();
                advance();
                bool closed = false;
                while (pos_ < text_.size()) {
                    if (peek() == '*' && peek(1) == '/') {
                        advance();
                        advance();
                        closed = true;
                        break;
                    }
                    advance();
                }
                if (!closed) error(open, "unterminated block comment");
            } else {
                break;
            }
        }
    }

    Token make(Tok kind, std::string text, SourceSpan span) {
        Token t;
        t.kind = kind;
        t.text = std::move(text);
        span.end_line = line_;
        span.end_col = col_ > 1 ? col_ - 1 : col_;
        t.span = span;
        return t;
    }

    Token next_token() {
        SourceSpan span = here(1);
        char c = peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
                word.push_back(advance());
            }
            return make(Tok::Ident, std::move(word), span);
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string digits;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(peek()))) {
                digits.push_back(advance());
            }
            return make(Tok::Integer, std::move(digits), span);
        }
        if (c == '"') {
            advance();
            std::string value;
            bool closed = false;
            while (pos_ < text_.size()) {
                char d = advance();
                if (d == '"') {
                    closed = true;
                    break;
                }
                if (d == '\\' && pos_ < text_.size()) {
                    char e = advance();
                    switch (e) {
                    case 'n': value.push_back('\n'); break;
                    case 't': value.push_back('\t'); break;
                    case 'r': value.push_back('\r'); break;
                    case '"': value.push_back('"'); break;
                    case '\\': value.push_back('\\'); break;
                    default:
                        error(here(1), std::string("unknown escape '\\") + e + "'");
                        value.push_back(e);
                    }
                } else {
                    value.push_back(d);
                }
            }
            if (!closed) error(span, "unterminated string literal");
            return make(Tok::String, std::move(value), span);
        }
        advance();
        switch (c) {
        case '{': return make(Tok::LBrace, "{", span);
        case '}': return make(Tok::RBrace, "}", span);
        case '(': return make(Tok::LParen, "(", span);
        case ')': return make(Tok::RParen, ")", span);
        case ';': return make(Tok::Semi, ";", span);
        case ',': return make(Tok::Comma, ",", span);
        case '+': return make(Tok::Plus, "+", span);
        case '*': return make(Tok::Star, "*", span);
        case ':':
            if (peek() == '=') {
                advance();
                return make(Tok::Assign, ":=", span);
            }
            return make(Tok::Colon, ":", span);
        case '.':
            if (peek() == '.') {
                advance();
                return make(Tok::DotDot, "..", span);
            }
            return make(Tok::Dot, ".", span);
        case '-':
            if (peek() == '>') {
                advance();
                return make(Tok::Arrow, "->", span);
            }
            return make(Tok::Minus, "-", span);
        case '~':
            if (peek() == '>') {
                advance();
                return make(Tok::TildeArrow, "~>", span);
            }
            error(span, "stray '~' (reverse navigation is '~>')");
            return make(Tok::TildeArrow, "~>", span);
        case '=': return make(Tok::Eq, "=", span);
        case '!':
            if (peek() == '=') {
                advance();
                return make(Tok::Ne, "!=", span);
            }
            error(span, "stray '!' (did you mean '!='?)");
            return make(Tok::Ne, "!=", span);
        case '<':
            if (peek() == '=') {
                advance();
                return make(Tok::Le, "<=", span);
            }
            return make(Tok::Lt, "<", span);
        case '>':
            if (peek() == '=') {
                advance();
                return make(Tok::Ge, ">=", span);
            }
            return make(Tok::Gt, ">", span);
        default:
            error(span, std::string("unexpected character '") + c + "'");
            return next_or_end();
        }
    }

    Token next_or_end() {
        skip_trivia();
        if (pos_ >= text_.size()) {
            Token t;
            t.kind = Tok::End;
            t.span = here(0);
            return t;
        }
        return next_token();
    }
};

// Words with fixed meaning inside predicates.
const std::set<std::string> kExprKeywords = {"true",  "false", "forall", "exists",
                                             "and",   "or",    "not",    "implies"};

struct Panic {};

class Parser {
public:
    Parser(std::string_view text, std::string file, ParseReport& report)
        : file_(std::move(file)), report_(report) {
        Lexer lexer(text, file_, report_);
        tokens_ = lexer.run();
    }

    std::optional<Parsed<Model>> model() {
        Model m;
        try {
            expect_word("model");
            Token name = ident("model name");
            m.name = name.text;
            spans_.record("model", m.name, name.span);
            expect(Tok::LBrace, "'{'");
        } catch (const Panic&) {
            return std::nullopt;
        }
        static const std::set<std::string> heads = {"template",  "action", "type",
                                                    "role",      "invariant", "static",
                                                    "dynamic"};
        while (!at(Tok::RBrace) && !at(Tok::End)) {
            try {
                if (at_word("template")) parse_template(m);
                else if (at_word("action")) parse_action(m);
                else if (at_word("type")) parse_type(m);
                else if (at_word("role")) parse_role(m);
                else if (at_word("invariant")) parse_invariant(m);
                else if (at_word("static")) parse_static(m);
                else if (at_word("dynamic")) parse_dynamic(m);
                else {
                    error(peek().span, "expected a declaration, found '" + peek().text + "'");
                    throw Panic{};
                }
            } catch (const Panic&) {
                synchronize(heads);
            }
        }
        if (at(Tok::End)) {
            error(peek().span, "unexpected end of input; missing '}'");
        } else {
            advance();
        }
        resolve_model(m);
        if (report_.failed()) return std::nullopt;
        return Parsed<Model>{std::move(m), std::move(spans_)};
    }

    std::optional<Parsed<System>> system() {
        System s;
        try {
            parse_system_body(s);
        } catch (const Panic&) {
            return std::nullopt;
        }
        if (report_.failed()) return std::nullopt;
        return Parsed<System>{std::move(s), std::move(spans_)};
    }

    std::optional<Parsed<Trace>> trace() {
        Trace t;
        std::optional<Int> declared_steps;
        try {
            expect_word("trace");
            expect(Tok::LBrace, "'{'");
            expect_word("model");
            expect(Tok::Colon, "':'");
            t.model = ident("model name").text;
            expect(Tok::Semi, "';'");
            expect_word("seed");
            expect(Tok::Colon, "':'");
            Token seed = expect(Tok::Integer, "seed value");
            t.seed = parse_u64(seed);
            expect(Tok::Semi, "';'");
            expect_word("steps");
            expect(Tok::Colon, "':'");
            Token steps = expect(Tok::Integer, "step count");
            declared_steps = Int(steps.text);
            expect(Tok::Semi, "';'");
            while (!at(Tok::RBrace) && !at(Tok::End)) {
                if (at_word("snapshot")) {
                    advance();
                    expect(Tok::LBrace, "'{'");
                    System snapshot;
                    parse_system_body(snapshot);
                    expect(Tok::RBrace, "'}'");
                    t.snapshots.push_back(std::move(snapshot));
                } else if (at_word("step")) {
                    t.steps.push_back(parse_step());
                } else {
                    error(peek().span, "expected 'snapshot' or 'step', found '" + peek().text +
                                           "'");
                    throw Panic{};
                }
            }
            expect(Tok::RBrace, "'}'");
        } catch (const Panic&) {
            return std::nullopt;
        }
        if (t.snapshots.empty()) {
            error(last_span_, "a trace needs at least one snapshot");
        } else if (t.snapshots.size() != t.steps.size() + 1) {
            error(last_span_, "trace has " + std::to_string(t.snapshots.size()) +
                                  " snapshots for " + std::to_string(t.steps.size()) + " steps");
        }
        if (declared_steps && *declared_steps != Int(t.steps.size())) {
            error(last_span_, "trace header declares " + declared_steps->str() + " steps but " +
                                  std::to_string(t.steps.size()) + " are recorded");
        }
        if (report_.failed()) return std::nullopt;
        return Parsed<Trace>{std::move(t), std::move(spans_)};
    }

private:
    std::string file_;
    ParseReport& report_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    SpanTable spans_;
    SourceSpan last_span_;

    struct PendingRef {
        enum class Kind { Template, Role, Action } kind;
        std::string name;
        SourceSpan span;
    };
    std::vector<PendingRef> pending_;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }

    const Token& advance() {
        const Token& t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        last_span_ = t.span;
        return t;
    }

    bool at(Tok kind) const { return peek().kind == kind; }
    bool at_word(std::string_view word) const {
        return peek().kind == Tok::Ident && peek().text == word;
    }

    void error(const SourceSpan& span, std::string message) {
        report_.messages.push_back(
            {ParseMessage::Severity::Error, span, std::move(message)});
    }

    [[noreturn]] void fail(const SourceSpan& span, std::string message) {
        error(span, std::move(message));
        throw Panic{};
    }

    Token expect(Tok kind, const char* what) {
        if (!at(kind)) fail(peek().span, std::string("expected ") + what + ", found '" +
                                             (at(Tok::End) ? "end of input" : peek().text) + "'");
        return advance();
    }

    Token expect_word(std::string_view word) {
        if (!at_word(word)) {
            fail(peek().span, "expected '" + std::string(word) + "', found '" +
                                  (at(Tok::End) ? "end of input" : peek().text) + "'");
        }
        return advance();
    }

    Token ident(const char* what) {
        if (!at(Tok::Ident)) {
            fail(peek().span, std::string("expected ") + what + ", found '" +
                                  (at(Tok::End) ? "end of input" : peek().text) + "'");
        }
        return advance();
    }

    std::uint64_t parse_u64(const Token& t) {
        try {
            return std::stoull(t.text);
        } catch (...) {
            error(t.span, "number '" + t.text + "' is out of range");
            return 0;
        }
    }

    void synchronize(const std::set<std::string>& heads) {
        int depth = 0;
        while (!at(Tok::End)) {
            if (at(Tok::LBrace)) {
                ++depth;
                advance();
                continue;
            }
            if (at(Tok::RBrace)) {
                if (depth == 0) return;
                --depth;
                advance();
                continue;
            }
            if (depth == 0 && peek().kind == Tok::Ident && heads.contains(peek().text)) return;
            advance();
        }
    }

    std::vector<std::string> ident_list(const char* what) {
        std::vector<std::string> names;
        names.push_back(ident(what).text);
        while (at(Tok::Comma)) {
            advance();
            names.push_back(ident(what).text);
        }
        return names;
    }

    /// Identifier list whose members must resolve as model-level references.
    std::set<std::string> ref_list(PendingRef::Kind kind, const char* what) {
        std::set<std::string> names;
        while (true) {
            Token t = ident(what);
            if (!names.insert(t.text).second) {
                error(t.span, std::string("duplicate ") + what + " '" + t.text + "'");
            }
            pending_.push_back({kind, t.text, t.span});
            if (!at(Tok::Comma)) break;
            advance();
        }
        return names;
    }

    /// Identifier list kept as written; membership rules judge it later.
    std::set<std::string> loose_list(const char* what) {
        std::set<std::string> names;
        while (true) {
            Token t = ident(what);
            if (!names.insert(t.text).second) {
                error(t.span, std::string("duplicate ") + what + " '" + t.text + "'");
            }
            if (!at(Tok::Comma)) break;
            advance();
        }
        return names;
    }

    // -- model declarations ---------------------------------------------

    template <class MapT>
    void declare(MapT& map, const std::string& category, const Token& name,
                 typename MapT::mapped_type value) {
        if (map.contains(name.text)) {
            error(name.span, "duplicate " + category + " '" + name.text + "'");
            return;
        }
        spans_.record(category, name.text, name.span);
        map.emplace(name.text, std::move(value));
    }

    void parse_template(Model& m) {
        advance();
        Token name = ident("template name");
        ObjectTemplate t;
        t.name = name.text;
        expect(Tok::LBrace, "'{'");
        std::set<std::string> seen;
        while (!at(Tok::RBrace)) {
            Token item = ident("template item");
            if (!seen.insert(item.text).second) {
                fail(item.span, "duplicate '" + item.text + "' section in template '" + t.name +
                                    "'");
            }
            if (item.text == "parents") {
                expect(Tok::Colon, "':'");
                t.parents = ref_list(PendingRef::Kind::Template, "parent template");
                expect(Tok::Semi, "';'");
            } else if (item.text == "attrs") {
                expect(Tok::LBrace, "'{'");
                while (!at(Tok::RBrace)) {
                    Token attr = ident("attribute name");
                    expect(Tok::Colon, "':'");
                    Token sort = ident("sort (int, bool or string)");
                    Sort s;
                    if (sort.text == "int") s = Sort::Int;
                    else if (sort.text == "bool") s = Sort::Bool;
                    else if (sort.text == "string") s = Sort::String;
                    else fail(sort.span, "unknown sort '" + sort.text + "'");
                    if (!t.attributes.emplace(attr.text, s).second) {
                        error(attr.span, "duplicate attribute '" + attr.text + "'");
                    }
                    expect(Tok::Semi, "';'");
                }
                expect(Tok::RBrace, "'}'");
            } else if (item.text == "types") {
                expect(Tok::Colon, "':'");
                t.types = loose_list("type reference");
                expect(Tok::Semi, "';'");
            } else if (item.text == "actions") {
                expect(Tok::Colon, "':'");
                t.actions = loose_list("action reference");
                expect(Tok::Semi, "';'");
            } else if (item.text == "dynamic") {
                expect(Tok::Colon, "':'");
                t.dynamic_schemas = loose_list("dynamic schema reference");
                expect(Tok::Semi, "';'");
            } else if (item.text == "static") {
                expect(Tok::Colon, "':'");
                t.static_schemas = loose_list("static schema reference");
                expect(Tok::Semi, "';'");
            } else if (item.text == "invariant") {
                expect(Tok::Colon, "':'");
                t.invariant_schemas = loose_list("invariant schema reference");
                expect(Tok::Semi, "';'");
            } else if (item.text == "tags") {
                expect(Tok::Colon, "':'");
                while (true) {
                    Token group = ident("tag group");
                    expect(Tok::Dot, "'.'");
                    Token kind = ident("tag kind");
                    t.tags.insert(EngineeringTag{group.text, kind.text});
                    if (!at(Tok::Comma)) break;
                    advance();
                }
                expect(Tok::Semi, "';'");
            } else {
                fail(item.span, "unknown template item '" + item.text + "'");
            }
        }
        expect(Tok::RBrace, "'}'");
        declare(m.templates, "template", name, std::move(t));
    }

    void parse_action(Model& m) {
        advance();
        Token name = ident("action name");
        ActionTemplate a;
        a.name = name.text;
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
            Token item = ident("action item");
            expect(Tok::Colon, "':'");
            if (item.text == "participants") {
                for (const std::string& p : ident_list("participant template")) {
                    a.participants.push_back(p);
                    pending_.push_back({PendingRef::Kind::Template, p, item.span});
                }
            } else if (item.text == "start") {
                a.start_state = ident("start state label").text;
            } else if (item.text == "end") {
                a.end_state = ident("end state label").text;
            } else if (item.text == "types") {
                a.types = loose_list("type reference");
            } else {
                fail(item.span, "unknown action item '" + item.text + "'");
            }
            expect(Tok::Semi, "';'");
        }
        expect(Tok::RBrace, "'}'");
        if (a.participants.empty()) {
            error(name.span, "action '" + a.name + "' must declare at least one participant");
        }
        if (a.start_state.empty() || a.end_state.empty()) {
            error(name.span, "action '" + a.name + "' must declare start and end state labels");
        }
        declare(m.action_templates, "action", name, std::move(a));
    }

    void parse_type(Model& m) {
        advance();
        Token name = ident("type name");
        TypeDef t;
        t.name = name.text;
        t.predicate = mk_bool(true);
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
            Token item = ident("type item");
            if (item.text == "pred") {
                expect(Tok::LBrace, "'{'");
                t.predicate = predicate();
                expect(Tok::RBrace, "'}'");
            } else if (item.text == "subtypes") {
                expect(Tok::Colon, "':'");
                t.subtypes = loose_list("subtype reference");
                expect(Tok::Semi, "';'");
            } else if (item.text == "supertypes") {
                expect(Tok::Colon, "':'");
                t.supertypes = loose_list("supertype reference");
                expect(Tok::Semi, "';'");
            } else {
                fail(item.span, "unknown type item '" + item.text + "'");
            }
        }
        expect(Tok::RBrace, "'}'");
        declare(m.types, "type", name, std::move(t));
    }

    void parse_role(Model& m) {
        advance();
        Token name = ident("role name");
        RoleDef r;
        r.name = name.text;
        bool has_card = false;
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
            Token item = ident("role item");
            expect(Tok::Colon, "':'");
            if (item.text == "source") {
                r.source_templates = ref_list(PendingRef::Kind::Template, "source template");
            } else if (item.text == "target") {
                r.target_templates = ref_list(PendingRef::Kind::Template, "target template");
            } else if (item.text == "card") {
                Token lo = expect(Tok::Integer, "lower bound");
                r.lower = parse_u64(lo);
                expect(Tok::DotDot, "'..'");
                if (at(Tok::Star)) {
                    advance();
                    r.upper = std::nullopt;
                } else {
                    Token hi = expect(Tok::Integer, "upper bound or '*'");
                    r.upper = parse_u64(hi);
                    if (*r.upper < r.lower) {
                        error(hi.span, "role '" + r.name + "' has lower bound " +
                                           std::to_string(r.lower) + " above upper bound " +
                                           hi.text);
                    }
                }
                has_card = true;
            } else if (item.text == "inverse") {
                Token inv = ident("inverse role");
                r.inverse = inv.text;
                pending_.push_back({PendingRef::Kind::Role, inv.text, inv.span});
            } else if (item.text == "scope") {
                Token scope = ident("scope (global or per-source)");
                if (scope.text == "global") {
                    r.scope = CountScope::Global;
                } else if (scope.text == "per") {
                    expect(Tok::Minus, "'-'");
                    Token src = ident("'source'");
                    if (src.text != "source") fail(src.span, "expected 'per-source'");
                    r.scope = CountScope::PerSource;
                } else {
                    fail(scope.span, "unknown scope '" + scope.text + "'");
                }
            } else {
                fail(item.span, "unknown role item '" + item.text + "'");
            }
            expect(Tok::Semi, "';'");
        }
        expect(Tok::RBrace, "'}'");
        if (r.source_templates.empty() || r.target_templates.empty()) {
            error(name.span, "role '" + r.name + "' must declare source and target templates");
        }
        if (!has_card) {
            error(name.span, "role '" + r.name + "' must declare a cardinality");
        }
        declare(m.roles, "role", name, std::move(r));
    }

    void parse_invariant(Model& m) {
        advance();
        Token name = ident("invariant schema name");
        InvariantSchema schema;
        schema.name = name.text;
        expect(Tok::LBrace, "'{'");
        schema.predicate = predicate();
        expect(Tok::RBrace, "'}'");
        declare(m.invariant_schemas, "invariant", name, std::move(schema));
    }

    void parse_static(Model& m) {
        advance();
        Token name = ident("static schema name");
        StaticSchema schema;
        schema.name = name.text;
        expect_word("at");
        schema.at_time = ident("time point label").text;
        expect(Tok::LBrace, "'{'");
        schema.predicate = predicate();
        expect(Tok::RBrace, "'}'");
        declare(m.static_schemas, "static", name, std::move(schema));
    }

    void parse_dynamic(Model& m) {
        advance();
        Token name = ident("dynamic schema name");
        DynamicSchema schema;
        schema.name = name.text;
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
            if (!at_word("rule")) {
                fail(peek().span, "expected 'rule', found '" + peek().text + "'");
            }
            schema.rules.push_back(parse_rule());
        }
        expect(Tok::RBrace, "'}'");
        declare(m.dynamic_schemas, "dynamic", name, std::move(schema));
    }

    DynamicRule parse_rule() {
        advance();
        Token name = ident("rule name");
        DynamicRule rule;
        rule.name = name.text;
        rule.precondition = mk_bool(true);
        rule.postcondition = mk_bool(true);
        spans_.record("rule", rule.name, name.span);
        expect(Tok::Colon, "':'");
        Token action = ident("action reference");
        rule.action = action.text;
        pending_.push_back({PendingRef::Kind::Action, action.text, action.span});
        expect(Tok::LParen, "'('");
        while (!at(Tok::RParen)) {
            Token var = ident("participant variable");
            expect(Tok::Colon, "':'");
            Token tpl = ident("participant template");
            pending_.push_back({PendingRef::Kind::Template, tpl.text, tpl.span});
            rule.participants.emplace_back(var.text, tpl.text);
            if (at(Tok::Comma)) advance();
        }
        expect(Tok::RParen, "')'");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
            Token item = ident("rule item");
            if (item.text == "pre") {
                expect(Tok::LBrace, "'{'");
                rule.precondition = predicate();
                expect(Tok::RBrace, "'}'");
            } else if (item.text == "post") {
                expect(Tok::LBrace, "'{'");
                rule.postcondition = predicate();
                expect(Tok::RBrace, "'}'");
            } else if (item.text == "effect") {
                expect(Tok::LBrace, "'{'");
                while (!at(Tok::RBrace)) rule.effects.push_back(parse_effect());
                expect(Tok::RBrace, "'}'");
            } else {
                fail(item.span, "unknown rule item '" + item.text + "'");
            }
        }
        expect(Tok::RBrace, "'}'");
        return rule;
    }

    Effect parse_effect() {
        if (at_word("create")) {
            advance();
            Effect::Create create;
            create.var = ident("create variable").text;
            expect(Tok::Colon, "':'");
            Token tpl = ident("template name");
            create.template_name = tpl.text;
            pending_.push_back({PendingRef::Kind::Template, tpl.text, tpl.span});
            expect(Tok::LBrace, "'{'");
            while (!at(Tok::RBrace)) {
                Token attr = ident("attribute name");
                expect(Tok::Eq, "'='");
                ExprPtr value = predicate();
                if (!create.init.emplace(attr.text, std::move(value)).second) {
                    error(attr.span, "duplicate attribute '" + attr.text + "'");
                }
                expect(Tok::Semi, "';'");
            }
            expect(Tok::RBrace, "'}'");
            return Effect{std::move(create)};
        }
        if (at_word("delete")) {
            advance();
            Effect::Delete del;
            del.var = ident("variable").text;
            expect(Tok::Semi, "';'");
            return Effect{std::move(del)};
        }
        if (at_word("reclassify")) {
            advance();
            Effect::Reclassify re;
            re.var = ident("variable").text;
            expect(Tok::Colon, "':'");
            Token tpl = ident("template name");
            re.template_name = tpl.text;
            pending_.push_back({PendingRef::Kind::Template, tpl.text, tpl.span});
            expect(Tok::Semi, "';'");
            return Effect{std::move(re)};
        }
        if (at_word("link")) {
            advance();
            Token op = ident("'add' or 'remove'");
            bool adding;
            if (op.text == "add") adding = true;
            else if (op.text == "remove") adding = false;
            else fail(op.span, "expected 'add' or 'remove' after 'link'");
            Token role = ident("role name");
            pending_.push_back({PendingRef::Kind::Role, role.text, role.span});
            expect(Tok::LParen, "'('");
            std::string source = ident("source variable").text;
            expect(Tok::Arrow, "'->'");
            std::string target = ident("target variable").text;
            expect(Tok::RParen, "')'");
            expect(Tok::Semi, "';'");
            if (adding) return Effect{Effect::AddLink{role.text, source, target}};
            return Effect{Effect::RemoveLink{role.text, source, target}};
        }
        // Assignment: var.attr := expr;
        Token var = ident("effect");
        expect(Tok::Dot, "'.'");
        Token attr = ident("attribute name");
        expect(Tok::Assign, "':='");
        ExprPtr value = predicate();
        expect(Tok::Semi, "';'");
        return Effect{Effect::Assign{var.text, attr.text, std::move(value)}};
    }

    // -- predicates -------------------------------------------------------

    ExprPtr predicate() { return parse_implies(); }

    ExprPtr with_span(ExprPtr e, const SourceSpan& span) {
        auto copy = std::make_shared<Expr>(*e);
        copy->span = span;
        return copy;
    }

    ExprPtr parse_implies() {
        SourceSpan span = peek().span;
        ExprPtr lhs = parse_or();
        if (at_word("implies")) {
            advance();
            ExprPtr rhs = parse_implies(); // right associative
            return with_span(mk_bin(BinOp::Implies, std::move(lhs), std::move(rhs)), span);
        }
        return lhs;
    }

    ExprPtr parse_or() {
        SourceSpan span = peek().span;
        ExprPtr lhs = parse_and();
        while (at_word("or")) {
            advance();
            lhs = with_span(mk_bin(BinOp::Or, std::move(lhs), parse_and()), span);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        SourceSpan span = peek().span;
        ExprPtr lhs = parse_not();
        while (at_word("and")) {
            advance();
            lhs = with_span(mk_bin(BinOp::And, std::move(lhs), parse_not()), span);
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (at_word("not")) {
            SourceSpan span = peek().span;
            advance();
            return with_span(mk_not(parse_not()), span);
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        SourceSpan span = peek().span;
        ExprPtr lhs = parse_additive();
        BinOp op;
        switch (peek().kind) {
        case Tok::Eq: op = BinOp::Eq; break;
        case Tok::Ne: op = BinOp::Ne; break;
        case Tok::Lt: op = BinOp::Lt; break;
        case Tok::Le: op = BinOp::Le; break;
        case Tok::Gt: op = BinOp::Gt; break;
        case Tok::Ge: op = BinOp::Ge; break;
        default: return lhs;
        }
        advance();
        return with_span(mk_bin(op, std::move(lhs), parse_additive()), span);
    }

    ExprPtr parse_additive() {
        SourceSpan span = peek().span;
        ExprPtr lhs = parse_multiplicative();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
            advance();
            lhs = with_span(mk_bin(op, std::move(lhs), parse_multiplicative()), span);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        SourceSpan span = peek().span;
        ExprPtr lhs = parse_postfix();
        while (at(Tok::Star)) {
            advance();
            lhs = with_span(mk_bin(BinOp::Mul, std::move(lhs), parse_postfix()), span);
        }
        return lhs;
    }

    ExprPtr parse_postfix() {
        ExprPtr base = parse_primary();
        while (true) {
            if (at(Tok::Dot)) {
                SourceSpan span = peek().span;
                advance();
                Token member = ident("member name");
                if (member.text == "size") {
                    base = with_span(mk_size(std::move(base)), span);
                } else if (member.text == "isEmpty") {
                    base = with_span(mk_is_empty(std::move(base)), span);
                } else if (member.text == "includes" || member.text == "includesAll") {
                    expect(Tok::LParen, "'('");
                    ExprPtr arg = predicate();
                    expect(Tok::RParen, "')'");
                    base = member.text == "includes"
                               ? with_span(mk_includes(std::move(base), std::move(arg)), span)
                               : with_span(mk_includes_all(std::move(base), std::move(arg)), span);
                } else {
                    base = with_span(mk_attr(std::move(base), member.text), span);
                }
            } else if (at(Tok::Arrow)) {
                SourceSpan span = peek().span;
                advance();
                Token role = ident("role name");
                base = with_span(mk_nav(std::move(base), role.text, false), span);
            } else if (at(Tok::TildeArrow)) {
                SourceSpan span = peek().span;
                advance();
                Token role = ident("role name");
                base = with_span(mk_nav(std::move(base), role.text, true), span);
            } else {
                break;
            }
        }
        return base;
    }

    ExprPtr parse_primary() {
        SourceSpan span = peek().span;
        if (at(Tok::Integer)) {
            Token t = advance();
            return with_span(mk_int(Int(t.text)), span);
        }
        if (at(Tok::Minus)) {
            advance();
            Token t = expect(Tok::Integer, "integer literal");
            return with_span(mk_int(-Int(t.text)), span);
        }
        if (at(Tok::String)) {
            Token t = advance();
            return with_span(mk_string(t.text), span);
        }
        if (at(Tok::LParen)) {
            advance();
            ExprPtr inner = predicate();
            expect(Tok::RParen, "')'");
            return inner;
        }
        if (at_word("true")) {
            advance();
            return with_span(mk_bool(true), span);
        }
        if (at_word("false")) {
            advance();
            return with_span(mk_bool(false), span);
        }
        if (at_word("forall") || at_word("exists")) {
            Quantifier q = peek().text == "forall" ? Quantifier::Forall : Quantifier::Exists;
            advance();
            Token var = ident("quantified variable");
            expect(Tok::Colon, "':'");
            Token domain = ident("template or type name");
            expect(Tok::Dot, "'.'");
            ExprPtr body = predicate();
            return with_span(mk_quant(q, var.text, domain.text, std::move(body)), span);
        }
        if (at(Tok::Ident)) {
            Token t = advance();
            if (kExprKeywords.contains(t.text)) {
                fail(t.span, "'" + t.text + "' cannot be used as a variable name");
            }
            return with_span(mk_var(t.text), span);
        }
        fail(span, "expected an expression, found '" +
                       (at(Tok::End) ? "end of input" : peek().text) + "'");
    }

    // -- systems ----------------------------------------------------------

    void parse_system_body(System& s) {
        expect_word("system");
        Token name = ident("system name");
        s.name = name.text;
        spans_.record("system", s.name, name.span);
        expect_word("conforms");
        s.model = ident("model name").text;
        expect(Tok::LBrace, "'{'");
        static const std::set<std::string> heads = {"object", "link", "time", "bind"};
        std::vector<std::pair<Token, Link>> links;
        std::vector<Token> bind_objects;
        while (!at(Tok::RBrace) && !at(Tok::End)) {
            try {
                if (at_word("object")) {
                    advance();
                    Token id = ident("object id");
                    expect(Tok::Colon, "':'");
                    ObjectInstance object;
                    object.id = id.text;
                    for (const std::string& t : ident_list("template name")) {
                        if (!object.templates.insert(t).second) {
                            error(id.span, "object '" + object.id +
                                               "' lists template '" + t + "' twice");
                        }
                    }
                    expect(Tok::LBrace, "'{'");
                    while (!at(Tok::RBrace)) {
                        Token attr = ident("attribute name");
                        expect(Tok::Eq, "'='");
                        Value value = parse_literal();
                        if (!object.state.emplace(attr.text, std::move(value)).second) {
                            error(attr.span, "duplicate attribute '" + attr.text + "'");
                        }
                        expect(Tok::Semi, "';'");
                    }
                    expect(Tok::RBrace, "'}'");
                    if (s.objects.contains(object.id)) {
                        error(id.span, "duplicate object id '" + object.id + "'");
                    } else {
                        spans_.record("object", object.id, id.span);
                        s.objects.emplace(object.id, std::move(object));
                    }
                } else if (at_word("link")) {
                    advance();
                    Token id = ident("link id");
                    expect(Tok::Colon, "':'");
                    Link link;
                    link.id = id.text;
                    link.role = ident("role name").text;
                    expect(Tok::LParen, "'('");
                    link.source = ident("source object").text;
                    expect(Tok::Arrow, "'->'");
                    link.target = ident("target object").text;
                    expect(Tok::RParen, "')'");
                    expect(Tok::Semi, "';'");
                    links.emplace_back(id, std::move(link));
                } else if (at_word("time")) {
                    advance();
                    Token label = ident("time point label");
                    expect(Tok::Semi, "';'");
                    if (std::ranges::find(s.time_points, label.text) != s.time_points.end()) {
                        error(label.span, "duplicate time point '" + label.text + "'");
                    } else {
                        spans_.record("time", label.text, label.span);
                        s.time_points.push_back(label.text);
                    }
                } else if (at_word("bind")) {
                    advance();
                    ConditionBinding b;
                    Token cond = ident("'pre' or 'post'");
                    if (cond.text == "pre") b.condition = ConditionKind::Pre;
                    else if (cond.text == "post") b.condition = ConditionKind::Post;
                    else fail(cond.span, "expected 'pre' or 'post' after 'bind'");
                    b.rule = ident("rule name").text;
                    Token object = ident("object id");
                    b.object = object.text;
                    Token point = ident("'start' or 'end'");
                    if (point.text == "start") b.bound = StatePoint::Start;
                    else if (point.text == "end") b.bound = StatePoint::End;
                    else fail(point.span, "expected 'start' or 'end'");
                    expect(Tok::Semi, "';'");
                    bind_objects.push_back(object);
                    s.bindings.push_back(b);
                } else {
                    error(peek().span,
                          "expected 'object', 'link', 'time' or 'bind', found '" + peek().text +
                              "'");
                    throw Panic{};
                }
            } catch (const Panic&) {
                synchronize(heads);
            }
        }
        expect(Tok::RBrace, "'}'");

        for (auto& [id, link] : links) {
            for (const std::string* endpoint : {&link.source, &link.target}) {
                if (!s.objects.contains(*endpoint)) {
                    error(id.span, "link '" + link.id + "' references unknown object '" +
                                       *endpoint + "'");
                }
            }
            if (s.links.contains(link.id)) {
                error(id.span, "duplicate link id '" + link.id + "'");
            } else {
                spans_.record("link", link.id, id.span);
                s.links.emplace(link.id, std::move(link));
            }
        }
        for (const Token& object : bind_objects) {
            if (!s.objects.contains(object.text)) {
                error(object.span, "bind references unknown object '" + object.text + "'");
            }
        }
        std::ranges::sort(s.bindings);
        s.bindings.erase(std::unique(s.bindings.begin(), s.bindings.end()), s.bindings.end());
    }

    Value parse_literal() {
        if (at(Tok::Integer)) return Value{Int(advance().text)};
        if (at(Tok::Minus)) {
            advance();
            Token t = expect(Tok::Integer, "integer literal");
            return Value{-Int(t.text)};
        }
        if (at(Tok::String)) return Value{advance().text};
        if (at_word("true")) {
            advance();
            return Value{true};
        }
        if (at_word("false")) {
            advance();
            return Value{false};
        }
        fail(peek().span, "expected a literal value, found '" + peek().text + "'");
    }

    TraceStep parse_step() {
        advance();
        TraceStep step;
        expect(Tok::LBrace, "'{'");
        expect_word("rule");
        expect(Tok::Colon, "':'");
        step.rule = ident("rule name").text;
        expect(Tok::Semi, "';'");
        expect_word("kind");
        expect(Tok::Colon, "':'");
        Token kind = ident("'internal' or 'interaction'");
        if (kind.text == "internal") step.kind = ActionKind::Internal;
        else if (kind.text == "interaction") step.kind = ActionKind::Interaction;
        else fail(kind.span, "expected 'internal' or 'interaction'");
        expect(Tok::Semi, "';'");
        while (!at(Tok::RBrace)) {
            if (at_word("bind")) {
                advance();
                Token var = ident("participant variable");
                expect(Tok::Eq, "'='");
                Token object = ident("object id");
                expect(Tok::Semi, "';'");
                if (!step.binding.emplace(var.text, object.text).second) {
                    error(var.span, "duplicate binding for variable '" + var.text + "'");
                }
            } else if (at_word("cond")) {
                advance();
                ConditionBinding b;
                Token cond = ident("'pre' or 'post'");
                if (cond.text == "pre") b.condition = ConditionKind::Pre;
                else if (cond.text == "post") b.condition = ConditionKind::Post;
                else fail(cond.span, "expected 'pre' or 'post' after 'cond'");
                b.rule = ident("rule name").text;
                b.object = ident("object id").text;
                Token point = ident("'start' or 'end'");
                if (point.text == "start") b.bound = StatePoint::Start;
                else if (point.text == "end") b.bound = StatePoint::End;
                else fail(point.span, "expected 'start' or 'end'");
                expect(Tok::Semi, "';'");
                step.condition_bindings.push_back(b);
            } else {
                fail(peek().span, "expected 'bind' or 'cond', found '" + peek().text + "'");
            }
        }
        expect(Tok::RBrace, "'}'");
        std::ranges::sort(step.condition_bindings);
        step.condition_bindings.erase(
            std::unique(step.condition_bindings.begin(), step.condition_bindings.end()),
            step.condition_bindings.end());
        return step;
    }

    // -- resolution -------------------------------------------------------

    void resolve_model(Model& m) {
        for (const PendingRef& ref : pending_) {
            bool ok = false;
            const char* what = "";
            switch (ref.kind) {
            case PendingRef::Kind::Template:
                ok = m.templates.contains(ref.name);
                what = "template";
                break;
            case PendingRef::Kind::Role:
                ok = m.roles.contains(ref.name);
                what = "role";
                break;
            case PendingRef::Kind::Action:
                ok = m.action_templates.contains(ref.name);
                what = "action";
                break;
            }
            if (!ok) {
                error(ref.span, std::string("unresolved ") + what + " '" + ref.name + "'");
            }
        }
        // Role inverses must be declared symmetrically.
        for (const auto& [name, role] : m.roles) {
            if (!role.inverse) continue;
            const RoleDef* other = m.find_role(*role.inverse);
            if (!other) continue; // unresolved, reported above
            if (!other->inverse || *other->inverse != name) {
                SourceSpan span = spans_.lookup("role", name).value_or(SourceSpan{});
                error(span, "role '" + name + "' declares inverse '" + *role.inverse +
                                "' but '" + *role.inverse + "' does not declare '" + name +
                                "' back");
            }
        }
        // Rule names are unique model-wide and bindings match their action's
        // participant list.
        std::map<std::string, std::string> rule_owner;
        for (const auto& [schema_name, schema] : m.dynamic_schemas) {
            for (const DynamicRule& rule : schema.rules) {
                auto [it, fresh] = rule_owner.emplace(rule.name, schema_name);
                SourceSpan span = spans_.lookup("rule", rule.name).value_or(SourceSpan{});
                if (!fresh) {
                    error(span, "duplicate rule name '" + rule.name + "' (also in dynamic schema '" +
                                    it->second + "')");
                    continue;
                }
                const ActionTemplate* action = m.find_action(rule.action);
                if (!action) continue; // unresolved, reported above
                if (action->participants.size() != rule.participants.size()) {
                    error(span, "rule '" + rule.name + "' binds " +
                                    std::to_string(rule.participants.size()) +
                                    " participants but action '" + action->name + "' declares " +
                                    std::to_string(action->participants.size()));
                    continue;
                }
                for (std::size_t i = 0; i < rule.participants.size(); ++i) {
                    if (rule.participants[i].second != action->participants[i]) {
                        error(span, "rule '" + rule.name + "' participant " +
                                        std::to_string(i + 1) + " is a '" +
                                        rule.participants[i].second + "' but action '" +
                                        action->name + "' declares '" +
                                        action->participants[i] + "'");
                    }
                }
            }
        }
    }
};

} // namespace

ParseOutcome<Model> parse_model(std::string_view text, std::string file) {
    ParseOutcome<Model> out;
    Parser parser(text, std::move(file), out.report);
    auto parsed = parser.model();
    if (parsed) out.parsed = std::move(parsed);
    return out;
}

ParseOutcome<System> parse_system(std::string_view text, std::string file) {
    ParseOutcome<System> out;
    Parser parser(text, std::move(file), out.report);
    auto parsed = parser.system();
    if (parsed) out.parsed = std::move(parsed);
    return out;
}

ParseOutcome<Trace> parse_trace(std::string_view text, std::string file) {
    ParseOutcome<Trace> out;
    Parser parser(text, std::move(file), out.report);
    auto parsed = parser.trace();
    if (parsed) out.parsed = std::move(parsed);
    return out;
}

} // namespace odp
