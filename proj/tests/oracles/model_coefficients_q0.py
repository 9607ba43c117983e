"""Symbolic oracle for the q=0, l=1 model coefficients with gauge e=1, e1=1, e2=x.

Values printed here are frozen into tests/test_model_operator.cpp.
"""
import sympy as sp

x = sp.symbols("x", real=True)
l = 1
e1 = sp.Integer(1)
e2 = x
e = sp.Integer(1)
rho = e.subs(x, x) ** 2 + e.subs(x, l - x) ** 2
T = sp.Matrix([[e1, e1.subs(x, l - x)], [e2, e2.subs(x, l - x)]]) / rho
W = sp.simplify(T.inv())
P = sp.simplify(-2 * T * W.diff(x))
Qd = sp.zeros(2, 2)
Qhat = sp.simplify(T * Qd * W - T * W.diff(x, 2))
S = sp.simplify(Qhat + P * P / 4 - P.diff(x) / 2)
print("T =", T)
print("Phat =", P, "at 0.25:", P.subs(x, sp.Rational(1, 4)))
print("Qhat =", Qhat, "at 0.25:", Qhat.subs(x, sp.Rational(1, 4)))
print("S =", S)
u = sp.sin(sp.pi * x)
U = sp.Matrix([u, u.subs(x, l - x)])
uh = sp.simplify(T * U)
print("uhat(sin pi x) =", uh)
model = sp.simplify(-uh.diff(x, 2) + P * uh.diff(x) + Qhat * uh)
print("model(uhat) / pi^2 uhat =", sp.simplify(model - sp.pi**2 * uh))

# gamma2 for u = sin(pi x): P_K(pi^2 sin pi x) in basis {x, x-1}
phi0, phil = x, x - 1
f = sp.pi**2 * sp.sin(sp.pi * x)
G = sp.Matrix([[sp.integrate(a * b, (x, 0, 1)) for b in (phi0, phil)] for a in (phi0, phil)])
r = sp.Matrix([sp.integrate(f * a, (x, 0, 1)) for a in (phi0, phil)])
print("gamma2 rhs =", r.T, "coeffs =", sp.simplify(G.solve(r)).T)
