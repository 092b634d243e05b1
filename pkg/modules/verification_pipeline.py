"""
Verification pipeline module
Runs the pointwise identity suite at seeded random points and the trace-bound suite
"""

import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from modules.exterior import ExtElem, basis_dim, ext_norm2, interior
from modules.identcheck import (HoloFamily, analytic_hessian, grad_phi_check, hessian_min_eigenvalue,
                                hessian_phi_check, flat_curvature_check, koszul_sff_check, rank_bound_check)
from modules.koszul import (KoszulSection, exactness_score, hom_norm2_check, koszul_pair, make_frame,
                            pointwise_lift)
from modules.quad import DomainSpec
from modules.trace import sharpness_family, trace_bound_check, trace_bound_fuzz

# Set up logging
logging.basicConfig(level=config.LOG_LEVEL)
logger = logging.getLogger(__name__)

PASS = 'PASS'
FAIL = 'FAIL'
SKIPPED = 'SKIPPED'

SHARPNESS_DIM = 3
SHARPNESS_TOL = 1e-9
FD_SCALE_LIMIT = 0.1  # step * sqrt|H| above this means the stencil straddles a feature of size 1/sqrt|H|


def sample_points(sec: KoszulSection, dom: DomainSpec, rng: np.random.Generator,
                  npoints: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw npoints uniformly from the domain and split off those near the zero locus of s.

    Returns:
        Tuple of (usable points, skipped points)
    """
    points = dom.sample(rng, npoints)
    moduli = np.array([np.linalg.norm(sec.evaluate(z)) for z in points])
    scale = sec.domain_scale(dom)
    near_zero = (moduli == 0.0) | (moduli < config.ZERO_LOCUS_REL * scale)
    if np.any(near_zero):
        logger.warning(f"{int(np.sum(near_zero))} of {npoints} points lie near the zero locus of s")
    return points[~near_zero], points[near_zero]


def _step_record(name: str, worst: float, tolerance: float, checked: int, skipped: int = 0,
                 detail: str = '') -> Dict:
    status = PASS if worst <= tolerance else FAIL
    if checked == 0:
        status = SKIPPED
    return {
        'step': name,
        'status': status,
        'max_error': float(worst),
        'tolerance': float(tolerance),
        'checked': checked,
        'skipped': skipped,
        'detail': detail,
    }


def _failed_record(name: str, error: Exception) -> Dict:
    return {
        'step': name,
        'status': FAIL,
        'max_error': float('inf'),
        'tolerance': 0.0,
        'checked': 0,
        'skipped': 0,
        'detail': f"{type(error).__name__}: {error}",
    }


def check_hom_norm(sec: KoszulSection, points: Sequence) -> Dict:
    """|d_p|_HS^2 against C(r-1, p-1)|s|^2 for every p, relative error."""
    worst = 0.0
    for z in points:
        frame = make_frame(sec, z)
        for p in range(1, sec.r + 1):
            norm2, expected = hom_norm2_check(frame, p)
            worst = max(worst, abs(norm2 - expected) / expected)
    return _step_record('hom_norm2', worst, config.NORM_IDENTITY_TOL, len(points))


def check_exactness(sec: KoszulSection, points: Sequence) -> Dict:
    """E(z) of the Koszul pair at every middle degree against |s(z)|^2, relative error."""
    worst = 0.0
    for z in points:
        frame = make_frame(sec, z)
        for p in range(0, sec.r + 1):
            score = exactness_score(*koszul_pair(frame.g_at, p))
            worst = max(worst, abs(score - frame.s_norm2) / frame.s_norm2)
    return _step_record('exactness', worst, config.EXACTNESS_AGREE_TOL, len(points))


def check_pointwise_lift(sec: KoszulSection, points: Sequence, rng: np.random.Generator) -> Dict:
    """
    Random pointwise cycles f = g _| eta; the lift must solve g _| h = f with |h|^2 = |f|^2 / |s|^2.

    For p = 1 every f is a cycle, so f is drawn directly.
    """
    worst = 0.0
    r = sec.r
    for z in points:
        frame = make_frame(sec, z)
        for p in range(1, r + 1):
            if p == 1:
                f = ExtElem.from_vector(r, 0, rng.standard_normal(1) + 1j * rng.standard_normal(1))
            else:
                dim = basis_dim(r, p)
                eta = ExtElem.from_vector(r, p, rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
                f = interior(frame.g_at, eta)
            f_norm2 = ext_norm2(f)
            if f_norm2 == 0.0:
                continue
            h = pointwise_lift(frame, p, f)
            residual = np.sqrt(ext_norm2(interior(frame.g_at, h) - f) / f_norm2)
            norm_gap = abs(ext_norm2(h) * frame.s_norm2 - f_norm2) / f_norm2
            worst = max(worst, residual, norm_gap)
    return _step_record('pointwise_lift', worst, config.LIFT_CYCLE_TOL, len(points))


def _fd_points(fam: HoloFamily, points: Sequence, step: float) -> Tuple[List, List[float], int]:
    """Points where the stencil resolves the Hessian scale, with max(1, |H|) per point."""
    usable, scales = [], []
    for z in points:
        scale = max(1.0, float(np.max(np.abs(analytic_hessian(fam, z)))))
        if step * np.sqrt(scale) > FD_SCALE_LIMIT:
            logger.warning(f"Finite-difference step {step} too coarse near z={np.asarray(z).tolist()}")
            continue
        usable.append(z)
        scales.append(scale)
    return usable, scales, len(points) - len(usable)


def check_fd(fam: HoloFamily, points: Sequence, step: float, kind: str) -> Dict:
    """
    Finite differences of log|Phi|^2 against the analytic gradient or Hessian.

    The error is normalised by max(1, |H|)^1.5 (gradient) or max(1, |H|)^2 (Hessian),
    the scale of the third and fourth derivatives.
    """
    usable, scales, skipped = _fd_points(fam, points, step)
    worst = 0.0
    for z, scale in zip(usable, scales):
        if kind == 'hessian':
            worst = max(worst, hessian_phi_check(fam, z, step) / scale ** 2)
        else:
            worst = max(worst, grad_phi_check(fam, z, step) / scale ** 1.5)
    tolerance = config.FD_HESSIAN_TOL if kind == 'hessian' else config.FD_GRAD_TOL
    name = 'hessian_phi' if kind == 'hessian' else 'grad_phi'
    return _step_record(name, worst, tolerance, len(usable), skipped, detail=f"step={step}")


def check_koszul_sff(sec: KoszulSection, points: Sequence, rng: np.random.Generator) -> Dict:
    """Projected derivative of d_p against B_s _| for every p."""
    worst = 0.0
    for z in points:
        scale = max(1.0, float(np.max(np.abs(sec.derivatives(z)))))
        for p in range(1, sec.r + 1):
            err_interleave, err_norm = koszul_sff_check(sec, p, z, rng)
            worst = max(worst, err_interleave / scale, err_norm)
    return _step_record('koszul_sff', worst, config.IDENTITY_TOL, len(points))


def check_rank_bound(sec: KoszulSection, points: Sequence, dom: Optional[DomainSpec] = None) -> Dict:
    """Rank of the Hessian of log|s|^2 never exceeds min(n, r-1)."""
    worst, skipped = rank_bound_check(sec, points, dom)
    record = _step_record('rank_bound', max(worst, 0), 0, len(points) - skipped, skipped)
    record['rank_excess'] = int(worst)
    return record


def check_flat_curvature(sec: KoszulSection, points: Sequence, rng: np.random.Generator) -> Dict:
    """Flat curvature identity against random coefficient arrays."""
    worst = max((flat_curvature_check(sec, z, rng) for z in points), default=0.0)
    return _step_record('flat_curvature', worst, config.IDENTITY_TOL, len(points))


def check_hessian_psd(fam: HoloFamily, points: Sequence) -> Dict:
    """Smallest eigenvalue of the Hessian is nonnegative up to IDENTITY_TOL * max(1, trace)."""
    worst = 0.0
    for z in points:
        smallest, trace = hessian_min_eigenvalue(fam, z)
        worst = max(worst, -smallest / max(1.0, trace))
    return _step_record('hessian_psd', worst, config.IDENTITY_TOL, len(points))


def check_trace_bound(trials: int, seed: int) -> Dict:
    """Randomized trace-bound fuzz plus the equality case D(u) = w0 (x) u."""
    fuzz = trace_bound_fuzz(trials=trials, seed=seed)
    rng = np.random.default_rng(seed)
    w0 = rng.standard_normal(SHARPNESS_DIM) + 1j * rng.standard_normal(SHARPNESS_DIM)
    lhs, rhs, rank = trace_bound_check(*sharpness_family(w0, SHARPNESS_DIM))
    sharpness_ratio = lhs / rhs
    record = _step_record('trace_bound', float(fuzz['violations']), 0, trials,
                          detail=f"worst fuzz ratio {fuzz['worst_ratio']:.12f}")
    record['fuzz'] = fuzz
    record['sharpness_ratio'] = sharpness_ratio
    record['sharpness_rank'] = rank
    if not 1 - SHARPNESS_TOL <= sharpness_ratio <= 1 + SHARPNESS_TOL:
        record['status'] = FAIL
        record['detail'] += f"; sharpness ratio {sharpness_ratio:.12f} is not 1"
    return record


def _run_step(name: str, func: Callable[[], Dict]) -> Dict:
    logger.info(f"Running {name}...")
    try:
        record = func()
        logger.info(f"{name}: {record['status']} (max error {record['max_error']:.3e})")
        return record
    except Exception as e:
        logger.error(f"Error in {name}: {e}")
        # Continue with other steps even if one fails
        return _failed_record(name, e)


def run_verification_pipeline(sec: KoszulSection, dom: DomainSpec, seed: int = config.DEFAULT_SEED,
                              npoints: int = config.DEFAULT_NPOINTS,
                              trials: int = config.TRACE_FUZZ_TRIALS,
                              step: float = config.FD_STEP,
                              points: Optional[np.ndarray] = None) -> Dict:
    """
    Execute the identity suite at seeded random points.

    Args:
        sec: Generators of the Koszul complex
        dom: Sampling domain
        seed: Seed for points, random data and the trace fuzz
        npoints: Number of sampled points (ignored when points are given)
        trials: Trace-bound fuzz trials
        step: Finite-difference step
        points: Explicit points, shape (N, n)

    Returns:
        Dictionary with one record per step and the overall verdict:
        {
            'steps': list of step records,
            'all_passed': bool,
            'points_used': int,
            'points_skipped': int
        }
    """
    logger.info(f"Starting verification pipeline: n={sec.n}, r={sec.r}, seed={seed}")
    rng = np.random.default_rng(seed)

    if points is None:
        usable, skipped = sample_points(sec, dom, rng, npoints)
        all_points = np.concatenate([usable, skipped]) if len(skipped) else usable
    else:
        all_points = np.asarray(points, dtype=complex)
        scale = sec.domain_scale(dom)
        keep = np.array([np.linalg.norm(sec.evaluate(z)) > config.ZERO_LOCUS_REL * scale for z in all_points])
        usable, skipped = all_points[keep], all_points[~keep]

    steps = []
    steps.append(_run_step('hom_norm2', lambda: check_hom_norm(sec, usable)))
    steps.append(_run_step('exactness', lambda: check_exactness(sec, usable)))
    steps.append(_run_step('pointwise_lift', lambda: check_pointwise_lift(sec, usable, rng)))

    if any(not gi.is_zero() for gi in sec.g):
        fam = HoloFamily.from_section(sec)
        steps.append(_run_step('grad_phi', lambda: check_fd(fam, usable, step, 'gradient')))
        steps.append(_run_step('hessian_phi', lambda: check_fd(fam, usable, step, 'hessian')))
        steps.append(_run_step('hessian_psd', lambda: check_hessian_psd(fam, usable)))
    else:
        logger.warning("All generators vanish identically; Hessian steps skipped")

    steps.append(_run_step('koszul_sff', lambda: check_koszul_sff(sec, usable, rng)))
    if len(usable):
        steps.append(_run_step('rank_bound', lambda: check_rank_bound(sec, all_points, dom)))
    else:
        steps.append(_step_record('rank_bound', 0, 0, 0, len(all_points)))
    steps.append(_run_step('flat_curvature', lambda: check_flat_curvature(sec, usable, rng)))
    steps.append(_run_step('trace_bound', lambda: check_trace_bound(trials, seed)))

    for record in steps:
        if record['status'] == SKIPPED and record['skipped'] == 0:
            record['skipped'] = len(skipped)
    all_passed = all(record['status'] != FAIL for record in steps)
    logger.info(f"Verification pipeline finished: {'all passed' if all_passed else 'failures present'}")
    return {
        'steps': steps,
        'all_passed': all_passed,
        'points_used': int(len(usable)),
        'points_skipped': int(len(skipped)),
    }


def summarize_failures(results: Dict) -> List[str]:
    """One line per failing step."""
    return [f"{record['step']}: max error {record['max_error']:.3e} > tolerance {record['tolerance']:.1e}"
            + (f" ({record['detail']})" if record['detail'] else '')
            for record in results['steps'] if record['status'] == FAIL]


if __name__ == "__main__":
    sec = KoszulSection.from_strings(["1", "z1"], 1)
    results = run_verification_pipeline(sec, DomainSpec.unit(1), npoints=10, trials=50)
    print("=" * 80)
    for record in results['steps']:
        print(f"{record['step']:<16} {record['status']:<8} {record['max_error']:.3e}")
    print("=" * 80)
