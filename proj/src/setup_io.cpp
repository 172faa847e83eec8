#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pdeform/errors.hpp"
#include "pdeform/harness.hpp"

namespace pdeform {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const
    {
        const YAML::Mark m = at.Mark();
        std::ostringstream os;
        os << source_;
        if (!m.is_null())
            os << ':' << m.line + 1 << ':' << m.column + 1;
        os << ": " << msg;
        throw ValidationError(os.str());
    }

    YAML::Node require(const YAML::Node& map, const std::string& key, const std::string& ctx) const
    {
        const YAML::Node n = map[key];
        if (!n)
            fail(map, ctx + ": missing required key '" + key + "'");
        return n;
    }

    void only_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& ctx) const
    {
        if (!map.IsMap())
            fail(map, ctx + ": expected a mapping");
        for (const auto& kv : map) {
            const std::string k = kv.first.as<std::string>();
            bool known = false;
            for (const char* allowed : keys)
                known = known || k == allowed;
            if (!known)
                fail(kv.first, ctx + ": unknown key '" + k + "'");
        }
    }

    double number(const YAML::Node& n, const std::string& ctx) const
    {
        if (!n.IsScalar())
            fail(n, ctx + ": expected a number");
        try {
            return n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, ctx + ": '" + n.Scalar() + "' is not a number");
        }
    }

    int integer(const YAML::Node& n, const std::string& ctx) const
    {
        if (!n.IsScalar())
            fail(n, ctx + ": expected an integer");
        try {
            return n.as<int>();
        } catch (const YAML::Exception&) {
            fail(n, ctx + ": '" + n.Scalar() + "' is not an integer");
        }
    }

    std::string text(const YAML::Node& n, const std::string& ctx) const
    {
        if (!n.IsScalar())
            fail(n, ctx + ": expected a string");
        return n.Scalar();
    }

    bool boolean(const YAML::Node& n, const std::string& ctx) const
    {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, ctx + ": expected true or false");
        }
    }

    YAML::Node sequence(const YAML::Node& n, const std::string& ctx) const
    {
        if (!n.IsSequence())
            fail(n, ctx + ": expected a list");
        return n;
    }

    std::vector<double> numbers(const YAML::Node& n, const std::string& ctx) const
    {
        std::vector<double> out;
        for (const auto& x : sequence(n, ctx))
            out.push_back(number(x, ctx));
        return out;
    }

    std::vector<int> integers(const YAML::Node& n, const std::string& ctx) const
    {
        std::vector<int> out;
        for (const auto& x : sequence(n, ctx))
            out.push_back(integer(x, ctx));
        return out;
    }

    Eigen::MatrixXd real_matrix(const YAML::Node& n, const std::string& ctx) const
    {
        std::vector<std::vector<double>> rows;
        for (const auto& r : sequence(n, ctx))
            rows.push_back(numbers(r, ctx));
        const auto nr = static_cast<Eigen::Index>(rows.size());
        const auto nc = nr == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
        Eigen::MatrixXd m(nr, nc);
        for (Eigen::Index i = 0; i < nr; ++i) {
            if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != nc)
                fail(n, ctx + ": matrix rows have different lengths");
            for (Eigen::Index j = 0; j < nc; ++j)
                m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        return m;
    }

    // Either a list of rows or {real: rows, imag: rows}.
    Matrix matrix(const YAML::Node& n, const std::string& ctx) const
    {
        if (n.IsSequence())
            return real_matrix(n, ctx).cast<cplx>();
        only_keys(n, {"real", "imag"}, ctx);
        const Eigen::MatrixXd re = real_matrix(require(n, "real", ctx), ctx);
        Eigen::MatrixXd im = Eigen::MatrixXd::Zero(re.rows(), re.cols());
        if (n["imag"]) {
            im = real_matrix(n["imag"], ctx);
            if (im.rows() != re.rows() || im.cols() != re.cols())
                fail(n, ctx + ": real and imaginary parts differ in shape");
        }
        Matrix m(re.rows(), re.cols());
        m.real() = re;
        m.imag() = im;
        return m;
    }

private:
    std::string source_;
};

int subsystem_ref(const Reader& rd, const SetupSpec& spec, const YAML::Node& n, const std::string& ctx)
{
    if (!n.IsScalar())
        rd.fail(n, ctx + ": expected a subsystem label or index");
    for (std::size_t k = 0; k < spec.subsystems.size(); ++k)
        if (spec.subsystems[k].label == n.Scalar())
            return static_cast<int>(k);
    int k = -1;
    try {
        k = n.as<int>();
    } catch (const YAML::Exception&) {
        rd.fail(n, ctx + ": unknown subsystem '" + n.Scalar() + "'");
    }
    if (k < 0 || k >= static_cast<int>(spec.subsystems.size()))
        rd.fail(n, ctx + ": subsystem index out of range");
    return k;
}

SubsystemSpec parse_subsystem(const Reader& rd, const YAML::Node& n, std::size_t index)
{
    const std::string ctx = "subsystem " + std::to_string(index);
    rd.only_keys(n, {"label", "energy_levels", "init", "beta", "populations", "init_generator"}, ctx);
    SubsystemSpec s;
    s.label = rd.text(rd.require(n, "label", ctx), ctx);
    const std::string who = "subsystem '" + s.label + "'";
    s.energy_levels = rd.numbers(rd.require(n, "energy_levels", who), who);
    const std::string init = rd.text(rd.require(n, "init", who), who);
    if (init == "thermal") {
        s.init = SubsystemSpec::Init::Thermal;
        s.beta = rd.number(rd.require(n, "beta", who), who);
        if (n["init_generator"])
            s.init_generator = rd.matrix(n["init_generator"], who);
        if (n["populations"])
            rd.fail(n["populations"], who + ": populations are only allowed with init: passive");
    } else if (init == "passive") {
        s.init = SubsystemSpec::Init::PassivePopulations;
        s.populations = rd.numbers(rd.require(n, "populations", who), who);
        if (n["beta"])
            rd.fail(n["beta"], who + ": beta is only allowed with init: thermal");
    } else {
        rd.fail(n["init"], who + ": init must be 'thermal' or 'passive'");
    }
    SetupSpec single;
    single.subsystems.push_back(s);
    try {
        validate_setup(single);
    } catch (const ValidationError& e) {
        rd.fail(n, e.what());
    }
    return s;
}

InteractionSpec parse_interaction(const Reader& rd, const SetupSpec& spec, const YAML::Node& n, std::size_t index)
{
    std::string ctx = "interaction " + std::to_string(index);
    rd.only_keys(n,
                 {"name", "kind", "strength", "terms", "hermitian_conjugate", "spins", "weights", "system", "bath",
                  "gammas", "matrix"},
                 ctx);
    InteractionSpec it;
    it.name = rd.text(rd.require(n, "name", ctx), ctx);
    ctx = "interaction '" + it.name + "'";
    const std::string kind = rd.text(rd.require(n, "kind", ctx), ctx);
    if (n["strength"])
        it.strength = rd.number(n["strength"], ctx);
    if (kind == "transitions") {
        it.kind = InteractionSpec::Kind::Transitions;
        if (n["hermitian_conjugate"])
            it.add_conjugate = rd.boolean(n["hermitian_conjugate"], ctx);
        for (const auto& term : rd.sequence(rd.require(n, "terms", ctx), ctx)) {
            std::vector<TransitionFactor> factors;
            for (const auto& f : rd.sequence(term, ctx)) {
                rd.only_keys(f, {"subsystem", "ket", "bra"}, ctx);
                TransitionFactor tf;
                tf.subsystem = subsystem_ref(rd, spec, rd.require(f, "subsystem", ctx), ctx);
                tf.ket = rd.integer(rd.require(f, "ket", ctx), ctx);
                tf.bra = rd.integer(rd.require(f, "bra", ctx), ctx);
                factors.push_back(tf);
            }
            it.terms.push_back(std::move(factors));
        }
    } else if (kind == "flip_flop") {
        it.kind = InteractionSpec::Kind::FlipFlop;
        for (const auto& s : rd.sequence(rd.require(n, "spins", ctx), ctx))
            it.spins.push_back(subsystem_ref(rd, spec, s, ctx));
        if (n["weights"])
            it.weights = rd.numbers(n["weights"], ctx);
    } else if (kind == "dephasing") {
        it.kind = InteractionSpec::Kind::Dephasing;
        it.system = subsystem_ref(rd, spec, rd.require(n, "system", ctx), ctx);
        for (const auto& s : rd.sequence(rd.require(n, "bath", ctx), ctx))
            it.bath.push_back(subsystem_ref(rd, spec, s, ctx));
        it.gammas = rd.numbers(rd.require(n, "gammas", ctx), ctx);
    } else if (kind == "custom") {
        it.kind = InteractionSpec::Kind::Custom;
        it.custom = rd.matrix(rd.require(n, "matrix", ctx), ctx);
    } else {
        rd.fail(n["kind"], ctx + ": unknown kind '" + kind + "'");
    }
    return it;
}

ObservableSpec parse_observable(const Reader& rd, const SetupSpec& spec, const YAML::Node& n, std::size_t index)
{
    std::string ctx = "observable " + std::to_string(index);
    rd.only_keys(n, {"name", "kind", "subsystem", "values", "scale", "matrix", "states", "support"}, ctx);
    ObservableSpec o;
    o.name = rd.text(rd.require(n, "name", ctx), ctx);
    ctx = "observable '" + o.name + "'";
    const std::string kind = rd.text(rd.require(n, "kind", ctx), ctx);
    if (kind == "local_diagonal") {
        o.kind = ObservableSpec::Kind::LocalDiagonal;
        o.subsystem = subsystem_ref(rd, spec, rd.require(n, "subsystem", ctx), ctx);
        o.values = rd.numbers(rd.require(n, "values", ctx), ctx);
    } else if (kind == "local_hamiltonian") {
        o.kind = ObservableSpec::Kind::LocalHamiltonian;
        o.subsystem = subsystem_ref(rd, spec, rd.require(n, "subsystem", ctx), ctx);
        if (n["scale"])
            o.scale = rd.number(n["scale"], ctx);
    } else if (kind == "local_matrix") {
        o.kind = ObservableSpec::Kind::LocalMatrix;
        o.subsystem = subsystem_ref(rd, spec, rd.require(n, "subsystem", ctx), ctx);
        o.custom = rd.matrix(rd.require(n, "matrix", ctx), ctx);
    } else if (kind == "projector") {
        o.kind = ObservableSpec::Kind::Projector;
        if (n["support"])
            for (const auto& s : rd.sequence(n["support"], ctx))
                o.support.push_back(subsystem_ref(rd, spec, s, ctx));
        for (const auto& s : rd.sequence(rd.require(n, "states", ctx), ctx))
            o.states.push_back(rd.integers(s, ctx));
    } else if (kind == "custom") {
        o.kind = ObservableSpec::Kind::Custom;
        o.custom = rd.matrix(rd.require(n, "matrix", ctx), ctx);
    } else {
        rd.fail(n["kind"], ctx + ": unknown kind '" + kind + "'");
    }
    return o;
}

std::vector<int> basis_state(const Reader& rd, const SetupSpec& spec, const YAML::Node& n, const std::string& ctx)
{
    std::vector<int> m = rd.integers(n, ctx);
    if (m.size() != spec.subsystems.size())
        rd.fail(n, ctx + ": basis state must list one level per subsystem");
    return m;
}

DemonSpec parse_demon_node(const Reader& rd, const SetupSpec* spec, const YAML::Node& n)
{
    const std::string ctx = "demon";
    rd.only_keys(n, {"p", "replacements"}, ctx);
    DemonSpec d;
    d.p = n["p"] ? rd.number(n["p"], ctx) : 1.0;
    for (const auto& r : rd.sequence(rd.require(n, "replacements", ctx), ctx)) {
        rd.only_keys(r, {"from", "to"}, ctx);
        if (spec) {
            d.replacements.emplace_back(basis_state(rd, *spec, rd.require(r, "from", ctx), ctx),
                                        basis_state(rd, *spec, rd.require(r, "to", ctx), ctx));
        } else {
            d.replacements.emplace_back(rd.integers(rd.require(r, "from", ctx), ctx),
                                        rd.integers(rd.require(r, "to", ctx), ctx));
        }
    }
    return d;
}

SetupSpec parse_root(const YAML::Node& root, const std::string& source)
{
    const Reader rd(source);
    rd.only_keys(root,
                 {"schema_version", "name", "notes", "subsystems", "correlations", "interactions", "partitions",
                  "observables", "pre_evolution", "demon", "parameters", "simulate"},
                 "setup");
    SetupSpec spec;
    spec.schema_version = rd.integer(rd.require(root, "schema_version", "setup"), "schema_version");
    if (spec.schema_version != kSetupSchemaVersion)
        rd.fail(root["schema_version"], "unsupported schema_version " + std::to_string(spec.schema_version));
    if (root["name"])
        spec.name = rd.text(root["name"], "name");
    if (root["notes"])
        spec.notes = rd.text(root["notes"], "notes");

    const YAML::Node subs = rd.sequence(rd.require(root, "subsystems", "setup"), "subsystems");
    std::size_t idx = 0;
    for (const auto& s : subs) {
        SubsystemSpec ss = parse_subsystem(rd, s, idx++);
        for (const auto& prev : spec.subsystems)
            if (prev.label == ss.label)
                rd.fail(s, "duplicate subsystem label '" + ss.label + "'");
        spec.subsystems.push_back(std::move(ss));
    }
    try {
        (void)total_dim(spec);
    } catch (const Error& e) {
        rd.fail(subs, e.what());
    }
    if (root["correlations"])
        spec.correlations = rd.numbers(root["correlations"], "correlations");
    idx = 0;
    if (root["interactions"])
        for (const auto& it : rd.sequence(root["interactions"], "interactions"))
            spec.interactions.push_back(parse_interaction(rd, spec, it, idx++));
    idx = 0;
    if (root["observables"])
        for (const auto& o : rd.sequence(root["observables"], "observables"))
            spec.observables.push_back(parse_observable(rd, spec, o, idx++));
    if (root["pre_evolution"]) {
        const YAML::Node pe = root["pre_evolution"];
        rd.only_keys(pe, {"interactions", "time"}, "pre_evolution");
        PreEvolutionSpec p;
        for (const auto& name : rd.sequence(rd.require(pe, "interactions", "pre_evolution"), "pre_evolution"))
            p.interactions.push_back(rd.text(name, "pre_evolution"));
        if (pe["time"])
            p.time = rd.number(pe["time"], "pre_evolution");
        spec.pre_evolution = p;
    }
    if (root["demon"])
        spec.demon = parse_demon_node(rd, &spec, root["demon"]);
    if (root["parameters"]) {
        const YAML::Node ps = root["parameters"];
        if (!ps.IsMap())
            rd.fail(ps, "parameters: expected a mapping");
        for (const auto& kv : ps)
            spec.parameters[kv.first.as<std::string>()] = rd.number(kv.second, "parameter '" + kv.first.as<std::string>() + "'");
    }
    if (root["simulate"])
        for (const auto& l : rd.sequence(root["simulate"], "simulate")) {
            const int k = subsystem_ref(rd, spec, l, "simulate");
            spec.simulate.push_back(spec.subsystems[static_cast<std::size_t>(k)].label);
        }
    if (root["partitions"]) {
        const YAML::Node parts = root["partitions"];
        if (!parts.IsMap())
            rd.fail(parts, "partitions: expected a mapping");
        const int n = total_dim(spec);
        for (const auto& kv : parts) {
            const std::string name = kv.first.as<std::string>();
            const std::string ctx = "partition '" + name + "'";
            const YAML::Node p = kv.second;
            rd.only_keys(p, {"description", "blocks", "from_interaction"}, ctx);
            ManifoldPartition mp;
            if (p["description"])
                mp.description = rd.text(p["description"], ctx);
            if (p["from_interaction"]) {
                const std::string iname = rd.text(p["from_interaction"], ctx);
                try {
                    mp.blocks = connected_components(interaction_hamiltonian(spec, iname)).blocks;
                } catch (const ValidationError& e) {
                    rd.fail(p["from_interaction"], ctx + ": " + e.what());
                }
            } else {
                for (const auto& b : rd.sequence(rd.require(p, "blocks", ctx), ctx)) {
                    std::vector<int> block;
                    for (const auto& e : rd.sequence(b, ctx)) {
                        if (e.IsSequence())
                            block.push_back(flat_index(spec, basis_state(rd, spec, e, ctx)));
                        else
                            block.push_back(rd.integer(e, ctx));
                    }
                    mp.blocks.push_back(std::move(block));
                }
            }
            try {
                mp.validate(n);
            } catch (const ValidationError& e) {
                rd.fail(p, ctx + ": " + e.what());
            }
            spec.partitions[name] = std::move(mp);
        }
    }
    try {
        validate_setup(spec);
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
    return spec;
}

YAML::Node load_yaml(const std::string& text, const std::string& source)
{
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
        throw ValidationError(os.str());
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ResourceError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void emit_list(YAML::Emitter& e, const std::vector<double>& v)
{
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v)
        e << x;
    e << YAML::EndSeq;
}

void emit_ints(YAML::Emitter& e, const std::vector<int>& v)
{
    e << YAML::Flow << YAML::BeginSeq;
    for (int x : v)
        e << x;
    e << YAML::EndSeq;
}

void emit_real_rows(YAML::Emitter& e, const Eigen::MatrixXd& m)
{
    e << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row[static_cast<std::size_t>(j)] = m(i, j);
        emit_list(e, row);
    }
    e << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& e, const Matrix& m)
{
    if (m.imag().cwiseAbs().maxCoeff() == 0.0) {
        emit_real_rows(e, m.real());
        return;
    }
    e << YAML::BeginMap << YAML::Key << "real" << YAML::Value;
    emit_real_rows(e, m.real());
    e << YAML::Key << "imag" << YAML::Value;
    emit_real_rows(e, m.imag());
    e << YAML::EndMap;
}

} // namespace

SetupSpec parse_setup_string(const std::string& text, const std::string& source)
{
    const YAML::Node root = load_yaml(text, source);
    if (!root.IsMap())
        throw ValidationError(source + ": setup file must be a mapping");
    return parse_root(root, source);
}

SetupSpec parse_setup(const std::string& path)
{
    return parse_setup_string(read_file(path), path);
}

DemonSpec parse_demon(const std::string& path)
{
    const YAML::Node root = load_yaml(read_file(path), path);
    const Reader rd(path);
    if (!root.IsMap())
        rd.fail(root, "demon file must be a mapping");
    return parse_demon_node(rd, nullptr, root["demon"] ? root["demon"] : root);
}

std::string emit_setup(const SetupSpec& spec)
{
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    const auto label = [&](int k) { return spec.subsystems[static_cast<std::size_t>(k)].label; };
    e << YAML::BeginMap;
    e << YAML::Key << "schema_version" << YAML::Value << spec.schema_version;
    e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << spec.name;
    if (!spec.notes.empty())
        e << YAML::Key << "notes" << YAML::Value << YAML::DoubleQuoted << spec.notes;
    e << YAML::Key << "subsystems" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : spec.subsystems) {
        e << YAML::BeginMap;
        e << YAML::Key << "label" << YAML::Value << YAML::DoubleQuoted << s.label;
        e << YAML::Key << "energy_levels" << YAML::Value;
        emit_list(e, s.energy_levels);
        if (s.init == SubsystemSpec::Init::Thermal) {
            e << YAML::Key << "init" << YAML::Value << "thermal";
            e << YAML::Key << "beta" << YAML::Value << s.beta;
            if (s.init_generator) {
                e << YAML::Key << "init_generator" << YAML::Value;
                emit_matrix(e, *s.init_generator);
            }
        } else {
            e << YAML::Key << "init" << YAML::Value << "passive";
            e << YAML::Key << "populations" << YAML::Value;
            emit_list(e, s.populations);
        }
        e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    if (spec.correlations) {
        e << YAML::Key << "correlations" << YAML::Value;
        emit_list(e, *spec.correlations);
    }
    if (!spec.interactions.empty()) {
        e << YAML::Key << "interactions" << YAML::Value << YAML::BeginSeq;
        for (const auto& it : spec.interactions) {
            e << YAML::BeginMap;
            e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << it.name;
            e << YAML::Key << "strength" << YAML::Value << it.strength;
            switch (it.kind) {
            case InteractionSpec::Kind::Transitions:
                e << YAML::Key << "kind" << YAML::Value << "transitions";
                e << YAML::Key << "hermitian_conjugate" << YAML::Value << it.add_conjugate;
                e << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
                for (const auto& term : it.terms) {
                    e << YAML::BeginSeq;
                    for (const auto& f : term)
                        e << YAML::Flow << YAML::BeginMap << YAML::Key << "subsystem" << YAML::Value
                          << YAML::DoubleQuoted << label(f.subsystem) << YAML::Key << "ket" << YAML::Value << f.ket
                          << YAML::Key << "bra" << YAML::Value << f.bra << YAML::EndMap;
                    e << YAML::EndSeq;
                }
                e << YAML::EndSeq;
                break;
            case InteractionSpec::Kind::FlipFlop:
                e << YAML::Key << "kind" << YAML::Value << "flip_flop";
                e << YAML::Key << "spins" << YAML::Value << YAML::Flow << YAML::BeginSeq;
                for (int k : it.spins)
                    e << YAML::DoubleQuoted << label(k);
                e << YAML::EndSeq;
                if (!it.weights.empty()) {
                    e << YAML::Key << "weights" << YAML::Value;
                    emit_list(e, it.weights);
                }
                break;
            case InteractionSpec::Kind::Dephasing:
                e << YAML::Key << "kind" << YAML::Value << "dephasing";
                e << YAML::Key << "system" << YAML::Value << YAML::DoubleQuoted << label(it.system);
                e << YAML::Key << "bath" << YAML::Value << YAML::Flow << YAML::BeginSeq;
                for (int k : it.bath)
                    e << YAML::DoubleQuoted << label(k);
                e << YAML::EndSeq;
                e << YAML::Key << "gammas" << YAML::Value;
                emit_list(e, it.gammas);
                break;
            case InteractionSpec::Kind::Custom:
                e << YAML::Key << "kind" << YAML::Value << "custom";
                e << YAML::Key << "matrix" << YAML::Value;
                emit_matrix(e, it.custom);
                break;
            }
            e << YAML::EndMap;
        }
        e << YAML::EndSeq;
    }
    if (!spec.partitions.empty()) {
        e << YAML::Key << "partitions" << YAML::Value << YAML::BeginMap;
        for (const auto& [name, p] : spec.partitions) {
            e << YAML::Key << name << YAML::Value << YAML::BeginMap;
            e << YAML::Key << "description" << YAML::Value << YAML::DoubleQuoted << p.description;
            e << YAML::Key << "blocks" << YAML::Value << YAML::BeginSeq;
            for (const auto& b : p.blocks)
                emit_ints(e, b);
            e << YAML::EndSeq << YAML::EndMap;
        }
        e << YAML::EndMap;
    }
    if (!spec.observables.empty()) {
        e << YAML::Key << "observables" << YAML::Value << YAML::BeginSeq;
        for (const auto& o : spec.observables) {
            e << YAML::BeginMap;
            e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << o.name;
            switch (o.kind) {
            case ObservableSpec::Kind::LocalDiagonal:
                e << YAML::Key << "kind" << YAML::Value << "local_diagonal";
                e << YAML::Key << "subsystem" << YAML::Value << YAML::DoubleQuoted << label(o.subsystem);
                e << YAML::Key << "values" << YAML::Value;
                emit_list(e, o.values);
                break;
            case ObservableSpec::Kind::LocalHamiltonian:
                e << YAML::Key << "kind" << YAML::Value << "local_hamiltonian";
                e << YAML::Key << "subsystem" << YAML::Value << YAML::DoubleQuoted << label(o.subsystem);
                e << YAML::Key << "scale" << YAML::Value << o.scale;
                break;
            case ObservableSpec::Kind::LocalMatrix:
                e << YAML::Key << "kind" << YAML::Value << "local_matrix";
                e << YAML::Key << "subsystem" << YAML::Value << YAML::DoubleQuoted << label(o.subsystem);
                e << YAML::Key << "matrix" << YAML::Value;
                emit_matrix(e, o.custom);
                break;
            case ObservableSpec::Kind::Projector:
                e << YAML::Key << "kind" << YAML::Value << "projector";
                if (!o.support.empty()) {
                    e << YAML::Key << "support" << YAML::Value << YAML::Flow << YAML::BeginSeq;
                    for (int k : o.support)
                        e << YAML::DoubleQuoted << label(k);
                    e << YAML::EndSeq;
                }
                e << YAML::Key << "states" << YAML::Value << YAML::BeginSeq;
                for (const auto& s : o.states)
                    emit_ints(e, s);
                e << YAML::EndSeq;
                break;
            case ObservableSpec::Kind::Custom:
                e << YAML::Key << "kind" << YAML::Value << "custom";
                e << YAML::Key << "matrix" << YAML::Value;
                emit_matrix(e, o.custom);
                break;
            }
            e << YAML::EndMap;
        }
        e << YAML::EndSeq;
    }
    if (spec.pre_evolution) {
        e << YAML::Key << "pre_evolution" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "interactions" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& n : spec.pre_evolution->interactions)
            e << YAML::DoubleQuoted << n;
        e << YAML::EndSeq;
        e << YAML::Key << "time" << YAML::Value << spec.pre_evolution->time;
        e << YAML::EndMap;
    }
    if (spec.demon) {
        e << YAML::Key << "demon" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "p" << YAML::Value << spec.demon->p;
        e << YAML::Key << "replacements" << YAML::Value << YAML::BeginSeq;
        for (const auto& [from, to] : spec.demon->replacements) {
            e << YAML::Flow << YAML::BeginMap << YAML::Key << "from" << YAML::Value;
            emit_ints(e, from);
            e << YAML::Key << "to" << YAML::Value;
            emit_ints(e, to);
            e << YAML::EndMap;
        }
        e << YAML::EndSeq << YAML::EndMap;
    }
    if (!spec.parameters.empty()) {
        e << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
        for (const auto& [k, v] : spec.parameters)
            e << YAML::Key << k << YAML::Value << v;
        e << YAML::EndMap;
    }
    if (!spec.simulate.empty()) {
        e << YAML::Key << "simulate" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (const auto& l : spec.simulate)
            e << YAML::DoubleQuoted << l;
        e << YAML::EndSeq;
    }
    e << YAML::EndMap;
    if (!e.good())
        throw ConsistencyError("emit_setup: " + e.GetLastError());
    return std::string(e.c_str()) + "\n";
}

std::uint64_t setup_hash(const SetupSpec& spec)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : emit_setup(spec)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string setup_hash_hex(const SetupSpec& spec)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(setup_hash(spec)));
    return buf;
}

DemonChannel demon_channel(const SetupSpec& spec, const DemonSpec& demon)
{
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [from, to] : demon.replacements)
        pairs.emplace_back(flat_index(spec, from), flat_index(spec, to));
    return DemonChannel::from_replacements(total_dim(spec), pairs, demon.p);
}

Matrix pre_evolution_unitary(const SetupSpec& spec)
{
    const int n = total_dim(spec);
    if (!spec.pre_evolution)
        return Matrix::Identity(n, n);
    HermitianOperator h = HermitianOperator::zero(n);
    for (const auto& name : spec.pre_evolution->interactions)
        h = h + interaction_hamiltonian(spec, name);
    return unitary_from_hamiltonian(h, spec.pre_evolution->time);
}

} // namespace pdeform
