import math

import numpy as np
import pytest

from oracles import coaxial_mutual_ph
from qdesign.constants import PHI0
from qdesign.errors import DataFormatError, DomainError, GeometryError
from qdesign.magnetics import (
    CouplingEstimate,
    GradiometricLoop,
    Polyline,
    bias_line,
    circle_loop,
    flux_per_current,
    gradiometer,
    gradiometric_mutual,
    half_annulus_loop,
    neumann_mutual,
    read_geometry,
    write_geometry,
    z_coupling,
)


class TestNeumann:
    def test_coaxial_against_elliptic_oracle(self):
        num = neumann_mutual(circle_loop(100.0, 720),
                             circle_loop(100.0, 720, center=(0.0, 0.0, 300.0)))
        ana = coaxial_mutual_ph(100.0, 100.0, 300.0)
        assert abs(num - ana) / ana < 1e-3

    def test_coaxial_unequal_radii(self):
        num = neumann_mutual(circle_loop(80.0, 720),
                             circle_loop(140.0, 720, center=(0.0, 0.0, 120.0)))
        ana = coaxial_mutual_ph(80.0, 140.0, 120.0)
        assert abs(num - ana) / ana < 1e-3

    def test_orientation_flip_changes_sign(self):
        a = circle_loop(100.0, 240)
        b = circle_loop(90.0, 240, center=(0.0, 0.0, 250.0))
        flipped = Polyline(b.vertices[::-1].copy(), closed=True)
        assert neumann_mutual(a, flipped) == pytest.approx(-neumann_mutual(a, b), rel=1e-12)

    def test_symmetry_random_loops(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            r1, r2 = rng.uniform(40.0, 140.0, 2)
            off = rng.uniform(-200.0, 200.0, 3) + np.array([0.0, 0.0, 300.0])
            a = circle_loop(float(r1), 180)
            b = circle_loop(float(r2), 200, center=tuple(off))
            assert neumann_mutual(a, b) == pytest.approx(neumann_mutual(b, a), rel=1e-10)

    def test_segment_count_convergence(self):
        a1 = neumann_mutual(circle_loop(100.0, 180),
                            circle_loop(100.0, 180, center=(0.0, 0.0, 120.0)))
        a2 = neumann_mutual(circle_loop(100.0, 360),
                            circle_loop(100.0, 360, center=(0.0, 0.0, 120.0)))
        assert abs(a2 - a1) / abs(a2) < 1e-3

    def test_open_loop_rejected(self):
        open_line = Polyline(np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]), closed=False)
        with pytest.raises(DomainError):
            neumann_mutual(open_line, circle_loop(50.0, 90))

    def test_touching_loops_rejected(self):
        a = circle_loop(100.0, 180)
        b = circle_loop(100.0, 180, center=(200.0, 0.0, 0.0))  # tangent circles
        with pytest.raises(GeometryError):
            neumann_mutual(a, b)

    def test_long_segments_near_loop_are_refined(self):
        # a 4-vertex rectangle close to a loop exercises the bisection path;
        # the finely pre-sampled rectangle is the reference
        loop = circle_loop(100.0, 360)
        coarse = Polyline(np.array([
            [150.0, -2000.0, 0.0], [150.0, 2000.0, 0.0],
            [2150.0, 2000.0, 0.0], [2150.0, -2000.0, 0.0]]), closed=True)
        from qdesign.magnetics import resample
        fine = Polyline(resample(coarse.vertices, 10.0), closed=True)
        m_coarse = neumann_mutual(loop, coarse)
        m_fine = neumann_mutual(loop, fine)
        assert abs(m_coarse - m_fine) / abs(m_fine) < 2e-3


class TestGradiometric:
    def test_uniform_far_source_rejection(self):
        grad = gradiometer(200.0, 290.0, n=120)
        near = gradiometric_mutual(grad, bias_line(360.0, 755.0))
        far = gradiometric_mutual(grad, bias_line(36000.0 + 300.0, 755.0, segment_um=400.0))
        assert abs(near) / abs(far) > 1e3

    def test_mirror_plane_source_cancels(self):
        # lobes split by the x axis; a symmetric loop in that plane couples
        # to both lobes identically
        grad = gradiometer(200.0, 290.0, n=120)
        sym = Polyline(np.array([
            [400.0, -5000.0, 0.0], [400.0, 5000.0, 0.0],
            [9400.0, 5000.0, 0.0], [9400.0, -5000.0, 0.0]]), closed=True)
        from qdesign.magnetics import resample
        sym = Polyline(resample(sym.vertices, 25.0), closed=True)
        m1 = neumann_mutual(grad.loop1, sym)
        assert abs(gradiometric_mutual(grad, sym)) < 1e-6 * abs(m1)

    def test_opposite_winding_enforced(self):
        up = half_annulus_loop(200.0, 290.0, "upper", 60)
        lo = half_annulus_loop(200.0, 290.0, "lower", 60)
        with pytest.raises(DomainError):
            GradiometricLoop(up, lo, orientation=(1, 1))


@pytest.fixture(scope="module")
def geo(cfg):
    return read_geometry(cfg.geometry_path())


class TestReferenceGeometry:
    def test_shipped_polylines_present(self, geo):
        assert set(geo) == {"squid_upper", "squid_lower", "ring", "bias_line"}
        assert geo["squid_upper"][1] == 1
        assert geo["squid_lower"][1] == -1

    def test_bias_line_mutual(self, geo):
        grad = GradiometricLoop(geo["squid_upper"][0], geo["squid_lower"][0])
        m = gradiometric_mutual(grad, geo["bias_line"][0])
        assert abs(abs(m) - 2.3) / 2.3 < 0.5

    def test_neighbor_loop_mutual(self, geo):
        ring = geo["ring"][0]
        r_edge = float(np.max(np.linalg.norm(ring.vertices[:, :2], axis=1)))
        d = 2.0 * r_edge + 150.0
        m = neumann_mutual(ring, ring.translated((0.0, d, 0.0)))
        assert abs(abs(m) - 31.0) / 31.0 < 0.5

    def test_rotation_null_and_parity(self, geo):
        ring = geo["ring"][0]
        r_edge = float(np.max(np.linalg.norm(ring.vertices[:, :2], axis=1)))
        d = 2.0 * r_edge + 150.0

        def squid_transfer(rot):
            g = GradiometricLoop(
                geo["squid_upper"][0].rotated_z(rot).translated((0.0, d, 0.0)),
                geo["squid_lower"][0].rotated_z(rot).translated((0.0, d, 0.0)),
            )
            return gradiometric_mutual(g, ring)

        m0 = squid_transfer(0.0)
        assert abs(squid_transfer(math.pi / 2.0)) < 1e-3  # pH
        assert abs(abs(squid_transfer(math.pi)) - abs(m0)) / abs(m0) < 0.05

    def test_aligned_junction_suppression(self, geo):
        ring = geo["ring"][0]
        r_edge = float(np.max(np.linalg.norm(ring.vertices[:, :2], axis=1)))
        d = 2.0 * r_edge + 150.0
        rot = math.pi / 2.0  # both junction axes along the separation
        ga = GradiometricLoop(geo["squid_upper"][0].rotated_z(rot),
                              geo["squid_lower"][0].rotated_z(rot))
        gb = GradiometricLoop(
            geo["squid_upper"][0].rotated_z(rot).translated((0.0, d, 0.0)),
            geo["squid_lower"][0].rotated_z(rot).translated((0.0, d, 0.0)),
        )
        m_aligned = (neumann_mutual(ga.loop1, gb.loop1) - neumann_mutual(ga.loop1, gb.loop2)
                     - neumann_mutual(ga.loop2, gb.loop1) + neumann_mutual(ga.loop2, gb.loop2))
        m_max = neumann_mutual(ring, ring.translated((0.0, d, 0.0)))
        assert abs(m_aligned) < abs(m_max) / 10.0


class TestCouplingChain:
    def test_z_coupling_reference(self):
        est = CouplingEstimate(m_ij=31.0, l_total=6.3, beta=0.10, g_ref=100e6)
        assert z_coupling(est) / 1e6 == pytest.approx(4.92, abs=0.05)

    def test_z_coupling_linearity(self):
        base = z_coupling(CouplingEstimate(m_ij=31.0, l_total=6.3, beta=0.10, g_ref=100e6))
        twice = z_coupling(CouplingEstimate(m_ij=62.0, l_total=6.3, beta=0.10, g_ref=100e6))
        assert twice == pytest.approx(2.0 * base, rel=1e-12)

    def test_z_coupling_requires_positive_inputs(self):
        with pytest.raises(DomainError):
            CouplingEstimate(m_ij=0.0, l_total=6.3, beta=0.10, g_ref=100e6)

    def test_flux_per_current_reference(self):
        assert flux_per_current(2.3e-12) * 1e3 == pytest.approx(0.90, rel=0.01)

    def test_flux_per_current_period(self):
        i_phi0 = flux_per_current(2.3e-12) * 1e3
        assert abs(2.0 * i_phi0 - 1.7) / 1.7 < 0.10

    def test_flux_per_current_inverse_relation(self):
        assert flux_per_current(1e-6) < 1e-8
        with pytest.raises(DomainError):
            flux_per_current(0.0)


class TestGeometryFile:
    def test_round_trip_bit_exact(self, tmp_path):
        loops = {
            "a": (circle_loop(123.456789012345, 24), 1),
            "b": (half_annulus_loop(50.0, 80.0, "lower", 16), -1),
        }
        p = tmp_path / "geo.txt"
        write_geometry(p, loops)
        back = read_geometry(p)
        for name in loops:
            assert np.array_equal(back[name][0].vertices, loops[name][0].vertices)
            assert back[name][1] == loops[name][1]

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("polyline x closed=maybe winding=+1\n0 0 0\nend\n")
        with pytest.raises(DataFormatError, match="line 1"):
            read_geometry(p)

    def test_bad_vertex_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("polyline x closed=yes winding=+1\n0 0\nend\n")
        with pytest.raises(DataFormatError, match="line 2"):
            read_geometry(p)

    def test_unterminated_block(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("polyline x closed=yes winding=+1\n0 0 0\n1 0 0\n0 1 0\n")
        with pytest.raises(DataFormatError, match="unterminated"):
            read_geometry(p)

    def test_zero_length_segment_rejected(self):
        with pytest.raises(GeometryError):
            Polyline(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
