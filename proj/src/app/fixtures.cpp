#include "poisat/fixtures.hpp"

#include <map>

#include "poisat/errors.hpp"

namespace poisat::fixtures {

namespace {

const std::map<std::string, std::string, std::less<>>& catalog() {
  static const std::map<std::string, std::string, std::less<>> c = {
      {"so3-plane", R"scene(# Linear Poisson structure on so(3)*. Leaves are the spheres of radius r >= 0.
# The plane z = 0 has pi-orthogonal span{y d/dx - x d/dy}, which vanishes at the
# origin, so the plane is not regular.
[poisson]
dim = 3
entry = 1 2 "z"
entry = 2 3 "x"
entry = 3 1 "y"
domain = -2 2 -2 2 -2 2

[submanifold]
params = u v
map = "u" "v" "0"
domain = -1 1 -1 1
grid = 5 5
)scene"},
      {"logsympl-axis", R"scene(# Log-symplectic plane x d/dx ^ d/dy. The x-axis meets the singular line x = 0,
# where the pi-orthogonal drops from rank 1 to 0.
[poisson]
dim = 2
entry = 1 2 "x"
domain = -2 2 -2 2

[submanifold]
params = u
map = "u" "0"
domain = -1 1
grid = 5
)scene"},
      {"cubic-graph", R"scene(# Graph z = x^3 in (R^3, d/dx ^ d/dy). The rank drops on the line (0, y, 0).
[poisson]
dim = 3
entry = 1 2 "1"
domain = -2 2 -2 2 -2 2

[submanifold]
params = u v
map = "u" "v" "u^3"
domain = -1 1 -1 1
grid = 5 5
)scene"},
      {"figure-eight", R"scene(# Figure-eight curve times the circle in (R^3 x S^1, d/dz ^ d/dth), chart on R^4.
# Regular with pi-orthogonal of rank 1; the saturation of the curve is not embedded.
[poisson]
dim = 4
entry = 3 4 "1"
domain = -4 4 -4 4 -4 4 -4 4

[submanifold]
params = t th
map = "(sin(2*t), sin(t), t, th)"
domain = -3 3 -3 3
grid = 7 5

[flow]
steps = 256
xi_radius = 0.2

[model]
xi_grid = 3
normal_form_tol = 1e-5
)scene"},
      {"coiso-line", R"scene(# Line (u, 0, 0) in (R^3, d/dx ^ d/dy). Coisotropic: the pi-orthogonal is d/dx.
# The local Poisson saturation is the plane z = 0.
[poisson]
dim = 3
entry = 1 2 "1"
domain = -2 2 -2 2 -2 2

[submanifold]
params = u
map = "u" "0" "0"
domain = -1 1
grid = 9

[flow]
steps = 1024
xi_radius = 0.2

[complement]
mode = coisotropic

[model]
xi_grid = 5
normal_form_tol = 1e-5
)scene"},
      {"transversal-ray", R"scene(# Radial segment (t+1, 0, 0) in so(3)*. It meets the spheres transversally,
# so its saturation is open and the tangent space is a canonical complement.
[poisson]
dim = 3
entry = 1 2 "z"
entry = 2 3 "x"
entry = 3 1 "y"
domain = -2 2 -2 2 -2 2

[submanifold]
params = t
map = "t+1" "0" "0"
domain = -0.5 0.5
grid = 5

[flow]
steps = 1024
xi_radius = 0.05

[complement]
mode = transversal

[model]
xi_grid = 3
normal_form_tol = 1e-4
)scene"},
      {"sympl-plane", R"scene(# Curved 2-plane in standard symplectic R^4. Every submanifold of a symplectic
# manifold is regular.
[poisson]
dim = 4
entry = 1 2 "1"
entry = 3 4 "1"
domain = -3 3 -3 3 -3 3 -3 3

[submanifold]
params = u v
map = "u" "v" "0.25*u*v" "0.1*u^2"
domain = -1 1 -1 1
grid = 5 5

[flow]
steps = 1024
xi_radius = 0.2

[model]
xi_grid = 3
normal_form_tol = 1e-5
)scene"},
      {"zero-structure", R"scene(# Zero Poisson structure on R^3. Every submanifold is a Poisson submanifold.
[poisson]
dim = 3
domain = -2 2 -2 2 -2 2

[submanifold]
params = u v
map = "u" "v" "u*v"
domain = -1 1 -1 1
grid = 3 3

[flow]
steps = 64
)scene"},
      {"gotay-presymplectic", R"scene(# Presymplectic R^3 with dx ^ dy. The kernel d/dz has constant rank 1, so the
# form embeds coisotropically into a Poisson structure on R^3 x R.
[presymplectic]
dim = 3
entry = 1 2 "1"
domain = -0.5 0.5 -0.5 0.5 -0.5 0.5
grid = 3 3 3

[flow]
xi_radius = 0.2

[model]
xi_grid = 3
)scene"},
  };
  return c;
}

}  // namespace

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"so3-plane",   "logsympl-axis",   "cubic-graph",
                                             "figure-eight", "coiso-line",      "transversal-ray",
                                             "sympl-plane",  "zero-structure",  "gotay-presymplectic"};
  return n;
}

const std::string& text(std::string_view name) {
  auto it = catalog().find(name);
  if (it == catalog().end()) throw Error("unknown fixture '" + std::string(name) + "'");
  return it->second;
}

}  // namespace poisat::fixtures
