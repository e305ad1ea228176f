#include "afem/examples.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace afem {

double sector_angle(Point x)
{
    double t = std::atan2(x.y, x.x);
    if (t < -0.25 * std::numbers::pi)
        t += 2.0 * std::numbers::pi;
    return t;
}

namespace {

// w = (r^lambda - r^nu) sin(lambda theta); the harmonic part r^lambda sin(lambda theta)
// drops out of the Laplacian, leaving Delta w = -(nu^2 - lambda^2) r^(nu-2) sin(lambda theta).
struct SingularMode
{
    double lambda;
    double nu;
    double scale;

    double value(Point x) const
    {
        const double r = norm(x);
        if (r == 0.0)
            return 0.0;
        return scale * (std::pow(r, lambda) - std::pow(r, nu)) * std::sin(lambda * sector_angle(x));
    }

    Point gradient(Point x) const
    {
        const double r = norm(x);
        if (r == 0.0)
            return {0.0, 0.0};
        const double th = sector_angle(x);
        const double s = std::sin(lambda * th), c = std::cos(lambda * th);
        const double dr = scale * (lambda * std::pow(r, lambda - 1.0) - nu * std::pow(r, nu - 1.0)) * s;
        const double dt = scale * (std::pow(r, lambda) - std::pow(r, nu)) * lambda * c / r;
        const double ct = x.x / r, st = x.y / r;
        return {dr * ct - dt * st, dr * st + dt * ct};
    }

    double laplacian(Point x) const
    {
        const double r = norm(x);
        if (r == 0.0)
            return 0.0;
        return -scale * (nu * nu - lambda * lambda) * std::pow(r, nu - 2.0) * std::sin(lambda * sector_angle(x));
    }
};

} // namespace

ExampleSpec example1(double nu1, double nu2, bool snap_to_arc, int arc_segments)
{
    constexpr double lambda = 2.0 / 3.0;
    constexpr double alpha = 0.1;
    constexpr double lower = -0.3, upper = 1.0;
    const SingularMode y{lambda, nu1, 1.0};
    const SingularMode p{lambda, nu2, alpha};

    ExampleSpec ex;
    ex.id = "1";
    ex.domain = {DomainKind::ThreeQuarterDisk, arc_segments, snap_to_arc};
    ex.has_exact = true;
    ex.default_theta = 0.4;
    auto u = [=](Point x) { return project_control(p.value(x), alpha, lower, upper); };
    ex.prob.alpha = alpha;
    ex.prob.lower = lower;
    ex.prob.upper = upper;
    ex.prob.f_extra = [=](Point x) { return -y.laplacian(x) - u(x); };
    ex.prob.y_d = [=](Point x) { return y.value(x) + p.laplacian(x); };
    ex.prob.exact = ExactSolution{
        {[=](Point x) { return y.value(x); }, [=](Point x) { return y.gradient(x); }},
        {[=](Point x) { return p.value(x); }, [=](Point x) { return p.gradient(x); }},
        u,
    };
    return ex;
}

ExampleSpec example2()
{
    ExampleSpec ex;
    ex.id = "2";
    ex.domain = {DomainKind::Square2};
    ex.default_theta = 0.5;
    ex.prob.alpha = 1e-3;
    ex.prob.lower = -10.0;
    ex.prob.upper = 10.0;
    ex.prob.y_d = [](Point x) {
        if (x.x > 0.0)
            return x.y > 0.0 ? 10.0 : -1.0;
        return x.y > 0.0 ? 1.0 : -10.0;
    };
    return ex;
}

ExampleSpec example3()
{
    ExampleSpec ex;
    ex.id = "3";
    ex.domain = {DomainKind::SlitSquare};
    ex.default_theta = 0.4;
    ex.prob.alpha = 1e-2;
    ex.prob.lower = 0.0;
    ex.prob.upper = 8.0;
    ex.prob.y_d = [](Point) { return 2.0; };
    return ex;
}

ExampleSpec smoke_example()
{
    constexpr double alpha = 0.1;
    constexpr double pi = std::numbers::pi;
    ExampleSpec ex;
    ex.id = "smoke";
    ex.domain = {DomainKind::UnitSquare};
    ex.has_exact = true;
    ex.default_theta = 0.4;

    auto y = [](Point x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
    auto grad_y = [](Point x) {
        return Point{pi * std::cos(pi * x.x) * std::sin(pi * x.y), pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
    };
    auto u = [=](Point x) { return project_control(-2.0 * alpha * y(x), alpha, 0.0, 1.0); };
    ex.prob.alpha = alpha;
    ex.prob.lower = 0.0;
    ex.prob.upper = 1.0;
    ex.prob.f_extra = [=](Point x) { return 2.0 * pi * pi * y(x) - u(x); };
    ex.prob.y_d = [=](Point x) { return (1.0 + 4.0 * alpha * pi * pi) * y(x); };
    ex.prob.exact = ExactSolution{
        {y, grad_y},
        {[=](Point x) { return -2.0 * alpha * y(x); }, [=](Point x) { return (-2.0 * alpha) * grad_y(x); }},
        u,
    };
    return ex;
}

ExampleSpec make_example(const std::string& id)
{
    if (id == "1")
        return example1();
    if (id == "2")
        return example2();
    if (id == "3")
        return example3();
    if (id == "smoke")
        return smoke_example();
    throw std::invalid_argument("unknown example '" + id + "'");
}

bool domain_contains(const DomainSpec& domain, Point x)
{
    switch (domain.kind) {
    case DomainKind::UnitSquare: return x.x > 0.0 && x.x < 1.0 && x.y > 0.0 && x.y < 1.0;
    case DomainKind::Square2: return std::abs(x.x) < 1.0 && std::abs(x.y) < 1.0;
    case DomainKind::SlitSquare:
        return std::abs(x.x) < 1.0 && std::abs(x.y) < 1.0 && !(x.x >= 0.0 && x.y <= 0.0);
    case DomainKind::ThreeQuarterDisk: {
        const double r = norm(x);
        return r > 0.0 && r < 1.0 && !(x.x >= 0.0 && x.y <= 0.0);
    }
    }
    return false;
}

} // namespace afem
