#include "imprel/problem.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace imprel
{

namespace
{

using nlohmann::json;

Interval read_interval(const json& j, const std::string& what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ProblemError(what + ": expected [lo, hi]");
    const double lo = j[0].get<double>(), hi = j[1].get<double>();
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ProblemError(what + ": invalid interval [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return {lo, hi};
}

Eigen::VectorXd read_vector(const json& j, Eigen::Index size, const std::string& what)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw ProblemError(what + ": expected " + std::to_string(size) + " numbers");
    Eigen::VectorXd v(size);
    for (Eigen::Index k = 0; k < size; ++k) {
        if (!j[static_cast<std::size_t>(k)].is_number())
            throw ProblemError(what + ": entry " + std::to_string(k + 1) + " is not a number");
        v(k) = j[static_cast<std::size_t>(k)].get<double>();
    }
    return v;
}

std::vector<std::string> read_names(const json& doc, const char* key, std::size_t n, char prefix)
{
    std::vector<std::string> names;
    if (doc.contains(key)) {
        names = doc.at(key).get<std::vector<std::string>>();
        if (names.size() != n)
            throw ProblemError(std::string(key) + ": expected " + std::to_string(n) + " names");
    } else {
        for (std::size_t k = 1; k <= n; ++k)
            names.push_back(std::string(1, prefix) + std::to_string(k));
    }
    return names;
}

std::vector<AffinePiece> read_pieces(const json& j, Eigen::Index nz, Eigen::Index np, const std::string& what)
{
    if (!j.is_array() || j.empty())
        throw ProblemError(what + ": expected a nonempty list of pieces");
    std::vector<AffinePiece> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string name = what + "[" + std::to_string(k + 1) + "]";
        const json& pj = j[k];
        if (!pj.is_object() || !pj.contains("alpha") || !pj.contains("a") || !pj.contains("b") ||
            !pj.at("b").is_number())
            throw ProblemError(name + ": expected {\"alpha\": [...], \"a\": [...], \"b\": number}");
        out.push_back({read_vector(pj.at("a"), np, name + ".a"), read_vector(pj.at("alpha"), nz, name + ".alpha"),
                       pj.at("b").get<double>()});
    }
    return out;
}

void read_options(const json& j, ProblemOptions& opts)
{
    if (!j.is_object())
        throw ProblemError("options: expected an object");
    if (j.contains("n_refs"))
        opts.n_refs = j.at("n_refs").get<std::size_t>();
    if (j.contains("seed"))
        opts.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tol_active"))
        opts.tol_active = j.at("tol_active").get<double>();
    if (j.contains("newton")) {
        const json& n = j.at("newton");
        if (n.contains("max_iter"))
            opts.newton.max_iter = n.at("max_iter").get<int>();
        if (n.contains("tol"))
            opts.newton.tol = n.at("tol").get<double>();
        if (n.contains("damping"))
            opts.newton.damping = n.at("damping").get<double>();
        if (n.contains("box_projection"))
            opts.newton.box_projection = n.at("box_projection").get<bool>();
    }
    if (!(opts.tol_active > 0.0))
        throw ProblemError("options.tol_active must be positive");
    try {
        opts.newton.validate();
    } catch (const std::invalid_argument& e) {
        throw ProblemError(std::string("options.newton: ") + e.what());
    }
}

}  // namespace

Problem parse_problem(std::string_view json_text)
{
    Problem prob;
    try {
        const json doc = json::parse(json_text);
        if (!doc.is_object())
            throw ProblemError("problem file must contain a JSON object");
        prob.name = doc.value("name", std::string());
        for (const char* key : {"residuals", "z_bounds", "p_bounds"})
            if (!doc.contains(key) || !doc.at(key).is_array())
                throw ProblemError(std::string("missing array \"") + key + "\"");
        for (std::size_t k = 0; k < doc.at("z_bounds").size(); ++k)
            prob.Z.push_back(read_interval(doc.at("z_bounds")[k], "z_bounds[" + std::to_string(k + 1) + "]"));
        for (std::size_t k = 0; k < doc.at("p_bounds").size(); ++k)
            prob.P.push_back(read_interval(doc.at("p_bounds")[k], "p_bounds[" + std::to_string(k + 1) + "]"));
        const Eigen::Index nz = prob.n_z(), np = prob.n_p();
        if (nz == 0)
            throw ProblemError("z_bounds is empty");
        prob.z_names = read_names(doc, "z_names", prob.Z.size(), 'z');
        prob.p_names = read_names(doc, "p_names", prob.P.size(), 'p');

        prob.residual_text = doc.at("residuals").get<std::vector<std::string>>();
        if (static_cast<Eigen::Index>(prob.residual_text.size()) != nz)
            throw ProblemError("expected " + std::to_string(nz) + " residuals (one per z variable), got " +
                               std::to_string(prob.residual_text.size()));
        for (std::size_t r = 0; r < prob.residual_text.size(); ++r) {
            try {
                prob.residuals.push_back(parse(prob.residual_text[r], static_cast<int>(nz), static_cast<int>(np)));
            } catch (const ParseError& e) {
                throw ProblemError("residual " + std::to_string(r + 1) + ": " + e.what() + " at position " +
                                   std::to_string(e.position()));
            }
        }

        if (doc.contains("reference_points")) {
            const json& refs = doc.at("reference_points");
            if (!refs.is_array())
                throw ProblemError("reference_points: expected a list");
            for (std::size_t k = 0; k < refs.size(); ++k)
                prob.reference_points.push_back(
                    read_vector(refs[k], nz + np, "reference_points[" + std::to_string(k + 1) + "]"));
        }

        prob.pieces.resize(prob.residual_text.size());
        if (doc.contains("pieces")) {
            const json& pieces = doc.at("pieces");
            if (!pieces.is_array() || pieces.size() != prob.residual_text.size())
                throw ProblemError("pieces: expected one entry (object or null) per residual");
            for (std::size_t r = 0; r < pieces.size(); ++r) {
                if (pieces[r].is_null())
                    continue;
                const std::string what = "pieces[" + std::to_string(r + 1) + "]";
                if (!pieces[r].is_object() || !pieces[r].contains("cv") || !pieces[r].contains("cc"))
                    throw ProblemError(what + ": expected {\"cv\": [...], \"cc\": [...]}");
                prob.pieces[r] = PWARelaxationPair{read_pieces(pieces[r].at("cv"), nz, np, what + ".cv"),
                                                   read_pieces(pieces[r].at("cc"), nz, np, what + ".cc")};
            }
        }
        if (doc.contains("options"))
            read_options(doc.at("options"), prob.options);
    } catch (const json::exception& e) {
        throw ProblemError(std::string("invalid problem file: ") + e.what());
    } catch (const IntervalError& e) {
        throw ProblemError(e.what());
    }
    return prob;
}

Problem load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ProblemError("cannot open problem file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_problem(text.str());
}

Model build_model(const Problem& problem)
{
    try {
        std::vector<Eigen::VectorXd> refs = problem.reference_points;
        if (refs.empty())
            refs = halton_points(problem.Z, problem.P, problem.options.n_refs, problem.options.seed);
        BuildOptions build;
        build.seed = problem.options.seed;
        std::vector<PWARelaxationPair> pieces;
        std::vector<std::size_t> residuals;
        std::vector<AffineEquality> equalities;
        for (std::size_t r = 0; r < problem.residuals.size(); ++r) {
            if (problem.pieces[r]) {
                pieces.push_back(*problem.pieces[r]);
                residuals.push_back(r);
                continue;
            }
            if (auto eq = detect_affine(problem.residuals[r], problem.Z, problem.P, build)) {
                eq->residual = r;
                equalities.push_back(std::move(*eq));
                continue;
            }
            if (refs.empty())
                throw ConstructionError("no reference points for residual " + std::to_string(r + 1));
            pieces.push_back(build_pwa(problem.residuals[r], problem.Z, problem.P, refs));
            residuals.push_back(r);
        }
        VectorImplicitProblem rel(problem.Z, problem.P, std::move(pieces), std::move(residuals),
                                  std::move(equalities));
        std::optional<ScalarImplicitRelaxation> scalar;
        if (rel.n_z() == 1 && rel.pieces().size() == 1)
            scalar = classify_pieces(rel.pieces()[0], problem.Z[0]);
        return Model{std::move(rel), std::move(scalar), std::move(refs)};
    } catch (const ConstructionError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConstructionError(e.what());
    } catch (const IntervalError& e) {
        throw ConstructionError(std::string("interval evaluation failed: ") + e.what());
    } catch (const EvalError& e) {
        throw ConstructionError(std::string("evaluation failed: ") + e.what());
    }
}

double model_value(const Model& model, const Eigen::VectorXd& p, Eigen::Index i, Side sense)
{
    if (model.scalar) {
        const RelaxationValue v = relax_eval_scalar(*model.scalar, p);
        return sense == Side::Cv ? v.x_cv : v.x_cc;
    }
    return relax_value(model.relaxation, p, i, sense).value;
}

}  // namespace imprel
