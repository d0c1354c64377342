from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from apstlab.lattice import hermite_normal_form, integer_kernel, lll_reduce, rank, saturate
from oracles import in_integer_span

small = st.integers(-6, 6)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 3), st.integers(2, 5), st.data())
def test_kernel_is_annihilated_and_full(m, n, data):
    matrix = [[data.draw(small) for _ in range(n)] for _ in range(m)]
    kernel = integer_kernel(matrix, n)
    for row in kernel:
        assert all(sum(a * b for a, b in zip(mrow, row)) == 0 for mrow in matrix)
    assert len(kernel) == n - rank(matrix)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.data())
def test_kernel_is_saturated(n, data):
    # a vector of the rational kernel that happens to be integral lies in the integer span
    matrix = [[data.draw(small) for _ in range(n)]]
    kernel = integer_kernel(matrix, n)
    coeffs = [data.draw(st.integers(-3, 3)) for _ in kernel]
    vec = [sum(c * row[i] for c, row in zip(coeffs, kernel)) for i in range(n)]
    assert in_integer_span(kernel, vec)


def test_rational_matrix_entries():
    kernel = integer_kernel([[Fraction(1, 2), Fraction(1, 3)]], 2)
    assert kernel in ([[2, -3]], [[-2, 3]])


def test_hnf_shape():
    rows = hermite_normal_form([[2, 4, 6], [1, 1, 1]])
    assert rows == [[1, 1, 1], [0, 2, 4]]


def test_saturate_divides_content():
    assert saturate([[2, 4, 6]], 3) == [[1, 2, 3]]
    assert saturate([[2, 0], [0, 2]], 2) == [[1, 0], [0, 1]]


def test_lll_keeps_lattice():
    rows = [[1, 0, 0, 1000], [0, 1, 0, 1414], [0, 0, 1, 1732]]
    reduced = lll_reduce(rows)
    for r in reduced:
        assert in_integer_span(rows, r)
    assert rank(reduced) == 3
