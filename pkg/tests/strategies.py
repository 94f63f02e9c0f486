from hypothesis import strategies as st

from bifurcat.model import ModelParams


@st.composite
def interior_point(draw):
    """(params, E2) with E2 the prey level of an interior equilibrium.

    E2 is drawn below r1/kappa1 and kappa2 is then fixed by the mite balance,
    so every draw is admissible.
    """
    r1 = draw(st.floats(10.0, 80.0))
    r2 = draw(st.floats(0.3, 3.0))
    alpha = draw(st.floats(1.0, 80.0))
    kappa1 = draw(st.floats(1.0, 40.0))
    a, c, m = (draw(st.floats(0.5, 2.0)) for _ in range(3))
    e2 = draw(st.floats(0.02, 0.95)) * r1 / kappa1
    M = (r1 - kappa1 * e2) * (a + e2) / m
    kappa2 = (r2 + c * m * e2 / (a + e2)) / M
    return ModelParams(r1, r2, alpha, kappa1, kappa2, a, c, m), e2
