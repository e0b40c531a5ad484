#include "modelmesh/discovery.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "modelmesh/errors.hpp"

namespace modelmesh {

void validate(const Query& q) {
    if (q.predicates.empty()) throw QueryError("query needs at least one predicate");
    validate(q.required_arch);
    for (const Predicate& p : q.predicates) {
        if (!(p.threshold >= 0.0 && p.threshold <= 1.0))
            throw QueryRangeError("threshold must lie in [0, 1]");
        if (p.metric == Metric::class_accuracy && p.class_index >= q.required_arch.num_classes)
            throw QueryError("class index " + std::to_string(p.class_index) +
                             " outside the architecture's " +
                             std::to_string(q.required_arch.num_classes) + " classes");
    }
}

namespace {

std::optional<double> metric_value(const Predicate& p, const QualityReport& quality) {
    if (p.metric == Metric::overall_accuracy) return quality.overall_accuracy;
    if (p.class_index >= quality.per_class_accuracy.size())
        throw QueryError("class index " + std::to_string(p.class_index) +
                         " outside the evaluation report");
    return quality.per_class_accuracy[p.class_index];
}

bool holds(PredicateOp op, double value, double threshold) {
    return op == PredicateOp::ge ? value >= threshold : value > threshold;
}

// Satisfaction vector plus margin score; score is meaningful only when every
// predicate holds.
MatchResult score_entry(const Query& query, const VaultEntry& entry) {
    MatchResult r;
    r.id = entry.id;
    r.satisfied.reserve(query.predicates.size());
    double margin_sum = 0.0;
    for (const Predicate& p : query.predicates) {
        const std::optional<double> value = metric_value(p, entry.quality);
        const bool ok = value.has_value() && holds(p.op, *value, p.threshold);
        r.satisfied.push_back(ok);
        if (ok) margin_sum += *value - p.threshold;
    }
    r.score = margin_sum / static_cast<double>(query.predicates.size());
    return r;
}

bool all_satisfied(const MatchResult& r) {
    return std::all_of(r.satisfied.begin(), r.satisfied.end(), [](bool b) { return b; });
}

bool rank_before(const MatchResult& a, const MatchResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

}  // namespace

std::vector<MatchResult> rank_candidates(const std::vector<VaultEntry>& satisfying,
                                         const Query& query) {
    validate(query);
    std::vector<MatchResult> ranked;
    ranked.reserve(satisfying.size());
    for (const VaultEntry& entry : satisfying) {
        MatchResult r = score_entry(query, entry);
        if (!all_satisfied(r))
            throw PreconditionError("rank_candidates expects satisfying entries only");
        ranked.push_back(std::move(r));
    }
    std::sort(ranked.begin(), ranked.end(), rank_before);
    return ranked;
}

std::optional<MatchResult> match(const Query& query, const std::vector<VaultEntry>& entries) {
    validate(query);
    std::optional<MatchResult> best;
    for (const VaultEntry& entry : entries) {
        if (entry.arch != query.required_arch) continue;
        if (query.exclude_owner && entry.owner == *query.exclude_owner) continue;
        MatchResult r = score_entry(query, entry);
        if (!all_satisfied(r)) continue;
        if (!best || rank_before(r, *best)) best = std::move(r);
    }
    return best;
}

namespace {

struct Scanner {
    const std::string& text;
    size_t pos = 0;

    [[noreturn]] void fail(size_t at, const std::string& what) const {
        throw QuerySyntaxError(at, what);
    }

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    void skip_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
    }

    bool try_literal(const std::string& lit) {
        if (text.compare(pos, lit.size(), lit) != 0) return false;
        pos += lit.size();
        return true;
    }

    void expect_char(char c, const std::string& what) {
        if (done() || peek() != c) fail(pos, what);
        ++pos;
    }

    uint32_t parse_uint(const std::string& what) {
        uint32_t value = 0;
        const auto [ptr, ec] =
            std::from_chars(text.data() + pos, text.data() + text.size(), value);
        if (ec != std::errc() || ptr == text.data() + pos) fail(pos, "expected " + what);
        pos = static_cast<size_t>(ptr - text.data());
        return value;
    }

    double parse_double(const std::string& what) {
        double value = 0.0;
        const auto [ptr, ec] =
            std::from_chars(text.data() + pos, text.data() + text.size(), value);
        if (ec != std::errc() || ptr == text.data() + pos) fail(pos, "expected " + what);
        pos = static_cast<size_t>(ptr - text.data());
        return value;
    }

    PredicateOp parse_op() {
        if (try_literal(">=")) return PredicateOp::ge;
        if (try_literal(">")) return PredicateOp::gt;
        fail(pos, "expected '>=' or '>'");
    }

    ArchDescriptor parse_arch_clause() {
        // "arch:" has been consumed.
        ArchDescriptor arch;
        if (try_literal("lr")) {
            arch.kind = ArchKind::logistic_regression;
        } else if (try_literal("mlp")) {
            arch.kind = ArchKind::mlp;
        } else {
            fail(pos, "expected architecture kind 'lr' or 'mlp'");
        }
        expect_char(':', "expected ':' after architecture kind");
        arch.input_dim = parse_uint("input dimension");
        expect_char(':', "expected ':' after input dimension");
        if (try_literal("-")) {
            // no hidden layers
        } else {
            arch.hidden_dims.push_back(parse_uint("hidden width"));
            while (!done() && peek() == ',') {
                ++pos;
                arch.hidden_dims.push_back(parse_uint("hidden width"));
            }
        }
        expect_char(':', "expected ':' after hidden widths");
        arch.num_classes = parse_uint("class count");
        return arch;
    }
};

}  // namespace

Query parse_query(const std::string& text) {
    Scanner s{text};
    Query query;
    bool have_arch = false;

    while (true) {
        s.skip_ws();
        if (s.done()) s.fail(s.pos, "expected a clause");
        const size_t clause_start = s.pos;
        if (s.try_literal("arch:")) {
            if (have_arch) s.fail(clause_start, "duplicate arch clause");
            query.required_arch = s.parse_arch_clause();
            have_arch = true;
        } else if (s.try_literal("overall")) {
            Predicate p;
            p.metric = Metric::overall_accuracy;
            p.op = s.parse_op();
            const size_t threshold_at = s.pos;
            p.threshold = s.parse_double("threshold");
            if (!(p.threshold >= 0.0 && p.threshold <= 1.0))
                throw QueryRangeError("threshold at byte " + std::to_string(threshold_at) +
                                      " must lie in [0, 1]");
            query.predicates.push_back(p);
        } else if (s.try_literal("class[")) {
            Predicate p;
            p.metric = Metric::class_accuracy;
            p.class_index = s.parse_uint("class index");
            s.expect_char(']', "expected ']' after class index");
            p.op = s.parse_op();
            const size_t threshold_at = s.pos;
            p.threshold = s.parse_double("threshold");
            if (!(p.threshold >= 0.0 && p.threshold <= 1.0))
                throw QueryRangeError("threshold at byte " + std::to_string(threshold_at) +
                                      " must lie in [0, 1]");
            query.predicates.push_back(p);
        } else {
            s.fail(clause_start, "expected 'arch:', 'overall' or 'class['");
        }
        s.skip_ws();
        if (s.done()) break;
        s.expect_char('&', "expected '&' between clauses");
    }

    if (!have_arch) s.fail(s.pos, "missing arch clause");
    if (query.predicates.empty()) s.fail(s.pos, "query needs at least one predicate");
    validate(query);
    return query;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

std::string serialize_query(const Query& query) {
    validate(query);
    std::string out = "arch:" + to_string(query.required_arch.kind) + ":" +
                      std::to_string(query.required_arch.input_dim) + ":";
    if (query.required_arch.hidden_dims.empty()) {
        out += "-";
    } else {
        for (size_t i = 0; i < query.required_arch.hidden_dims.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(query.required_arch.hidden_dims[i]);
        }
    }
    out += ":" + std::to_string(query.required_arch.num_classes);
    for (const Predicate& p : query.predicates) {
        out += " & ";
        if (p.metric == Metric::overall_accuracy)
            out += "overall";
        else
            out += "class[" + std::to_string(p.class_index) + "]";
        out += p.op == PredicateOp::ge ? ">=" : ">";
        out += format_double(p.threshold);
    }
    return out;
}

}  // namespace modelmesh
