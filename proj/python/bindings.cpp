// Python access to the lab: special functions, the ground state, the distance
// ODE, grid fields and the command line.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "zk/bessel.hpp"
#include "zk/cli.hpp"
#include "zk/errors.hpp"
#include "zk/evolution.hpp"
#include "zk/experiments.hpp"
#include "zk/io.hpp"

namespace py = pybind11;

namespace {

py::array_t<double> to_numpy(const zk::Field2D& f) {
    py::array_t<double> a({f.grid.Nx, f.grid.Ny});
    auto m = a.mutable_unchecked<2>();
    for (int i = 0; i < f.grid.Nx; ++i)
        for (int j = 0; j < f.grid.Ny; ++j) m(i, j) = f(i, j);
    return a;
}

zk::Field2D from_numpy(const zk::Grid2D& g, const py::array_t<double>& a) {
    if (a.ndim() != 2 || a.shape(0) != g.Nx || a.shape(1) != g.Ny)
        throw std::invalid_argument("array shape does not match the grid");
    auto m = a.unchecked<2>();
    zk::Field2D f(g);
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < g.Ny; ++j) f(i, j) = m(i, j);
    return f;
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> all{"zklab"};
    all.insert(all.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : all) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release nogil;
        code = zk::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_zklab, m) {
    m.doc() = "numerical lab for two-soliton interaction in the 2D Zakharov-Kuznetsov equation";
    m.attr("__version__") = std::string(zk::version());

    m.def("bessel_k0", &zk::bessel_k0, py::arg("r"), py::arg("deriv") = 0);
    m.def("lk_series", &zk::lk_series, py::arg("r"), py::arg("k"), py::arg("deriv") = 0);
    m.def("cli", &run_cli, py::arg("args"), "run the zklab command line; returns (code, stdout, stderr)");

    py::class_<zk::Grid2D>(m, "Grid")
        .def(py::init(&zk::Grid2D::make), py::arg("Lx"), py::arg("Ly"), py::arg("Nx"), py::arg("Ny"))
        .def_readonly("Lx", &zk::Grid2D::Lx)
        .def_readonly("Ly", &zk::Grid2D::Ly)
        .def_readonly("Nx", &zk::Grid2D::Nx)
        .def_readonly("Ny", &zk::Grid2D::Ny)
        .def_property_readonly("x", [](const zk::Grid2D& g) {
            std::vector<double> v(g.Nx);
            for (int i = 0; i < g.Nx; ++i) v[i] = g.x(i);
            return v;
        })
        .def_property_readonly("y", [](const zk::Grid2D& g) {
            std::vector<double> v(g.Ny);
            for (int j = 0; j < g.Ny; ++j) v[j] = g.y(j);
            return v;
        });

    py::class_<zk::Lab>(m, "Lab")
        .def(py::init([](const std::string& profile_cache, const std::string& table_cache) {
                 return zk::Lab({profile_cache, table_cache});
             }),
             py::arg("profile_cache") = "", py::arg("table_cache") = "")
        .def("Q", [](zk::Lab& l, double r, int deriv) { return l.profile().eval(r, deriv); }, py::arg("r"),
             py::arg("deriv") = 0)
        .def_property_readonly("q0", [](zk::Lab& l) { return l.profile().q0(); })
        .def("constants",
             [](zk::Lab& l) {
                 const zk::GroundStateConstants& c = l.constants();
                 py::dict d;
                 d["int_q"] = c.int_q;
                 d["int_q2"] = c.int_q2;
                 d["lam_q_q"] = c.lam_q_q;
                 d["q3"] = c.q3;
                 d["c_q"] = c.c_q;
                 d["kappa"] = c.kappa;
                 d["c_int"] = c.c_int;
                 return d;
             })
        .def("F", [](zk::Lab& l, double z) { return l.zdyn().F(z); })
        .def("G", [](zk::Lab& l, double z) { return l.zdyn().G(z); })
        .def("mu0_from_z0", [](zk::Lab& l, double z0) { return l.zdyn().mu0_from_z0(z0); })
        .def("z0_from_mu0", [](zk::Lab& l, double mu0) { return l.zdyn().z0_from_mu0(mu0); })
        .def(
            "trajectory",
            [](zk::Lab& l, double z0, double t_end) {
                const zk::ZTrajectory tr = l.zdyn().integrate(z0, t_end);
                std::vector<double> t, z, zd;
                for (const auto& s : tr.samples) {
                    t.push_back(s.t);
                    z.push_back(s.Z);
                    zd.push_back(s.Zdot);
                }
                return py::make_tuple(t, z, zd);
            },
            py::arg("z0"), py::arg("t_end"), "distance ODE samples (t, Z, Zdot), even about t = 0")
        .def(
            "soliton",
            [](zk::Lab& l, const zk::Grid2D& g, double x0, double y0, double c) {
                return to_numpy(zk::place_profile(l.profile(), g, x0, y0, c));
            },
            py::arg("grid"), py::arg("x0") = 0.0, py::arg("y0") = 0.0, py::arg("c") = 1.0);

    m.def(
        "invariants",
        [](const zk::Grid2D& g, const py::array_t<double>& a) {
            const zk::Invariants iv = zk::invariants_of(from_numpy(g, a));
            py::dict d;
            d["mean"] = iv.mean;
            d["mass"] = iv.mass;
            d["energy"] = iv.energy;
            d["energy_original"] = iv.energy_original;
            return d;
        },
        py::arg("grid"), py::arg("field"));
    m.def(
        "evolve",
        [](const zk::Grid2D& g, const py::array_t<double>& a, double dt, int steps) {
            zk::Evolver ev(from_numpy(g, a), dt);
            {
                py::gil_scoped_release nogil;
                ev.advance(steps);
            }
            return to_numpy(ev.field());
        },
        py::arg("grid"), py::arg("field"), py::arg("dt"), py::arg("steps"));

    py::register_exception<zk::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<zk::BoxTooSmallError>(m, "BoxTooSmallError", PyExc_ValueError);
}
