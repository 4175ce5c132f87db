import csv
import json
import logging
import os
from gettext import gettext as _

import numpy as np

from pf_nucleation import __version__
from pf_nucleation.app.constants import TRACE_CSV_COLUMNS
from pf_nucleation.app.models import FieldState

log = logging.getLogger(__name__)

VTK_TRIANGLE = 5


def write_vtk(mesh, state, path, title="pf_nucleation fields"):
    """
    Write the mesh and fields as a legacy ASCII VTK unstructured grid.

    The point data holds ``displacement`` (three components; in-plane components with z = 0,
    or (0, 0, u_z) in anti-plane shear) and the scalar ``phase``.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): the fields
        path (str): destination file
        title (str): header comment

    """
    n = mesh.n_nodes
    displacement = np.zeros((n, 3))
    if state.u.size == 2 * n:
        displacement[:, :2] = state.u.reshape(n, 2)
    elif state.u.size == n:
        displacement[:, 2] = state.u
    else:
        raise ValueError(_("Displacement size {} does not match {} nodes").format(state.u.size, n))
    lines = [
        "# vtk DataFile Version 3.0",
        title.splitlines()[0] if title else "",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        "POINTS {} double".format(n),
    ]
    lines.extend("{!r} {!r} 0.0".format(float(x), float(y)) for x, y in mesh.node_coords)
    lines.append("CELLS {} {}".format(mesh.n_elements, 4 * mesh.n_elements))
    lines.extend("3 {} {} {}".format(i, j, k) for i, j, k in mesh.triangles)
    lines.append("CELL_TYPES {}".format(mesh.n_elements))
    lines.extend([str(VTK_TRIANGLE)] * mesh.n_elements)
    lines.append("POINT_DATA {}".format(n))
    lines.append("VECTORS displacement double")
    lines.extend("{!r} {!r} {!r}".format(*map(float, row)) for row in displacement)
    lines.append("SCALARS phase double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(repr(float(value)) for value in state.d)
    with open(path, "w") as vtk_file:
        vtk_file.write("\n".join(lines) + "\n")


def write_state(state, path):
    """Save a state as a compressed ``.npz`` file."""
    np.savez_compressed(path, u=state.u, d=state.d)


def read_state(path):
    """Load a state written by :func:`write_state`."""
    with np.load(path) as data:
        return FieldState(data["u"], data["d"])


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def trace_rows(trace):
    """
    Rows of the trace CSV, one dict per step keyed by ``TRACE_CSV_COLUMNS``.

    Args:
        trace (RunTrace): the run history

    """
    for record in trace.records:
        yield {
            "step": record.step,
            "u_b": record.u_b,
            "sigma_max": record.sigma_max,
            "vigilance": record.vigilance,
            "pi_nc_elastic": record.pi_nc_elastic,
            "pi_nc_surface": record.pi_nc_surface,
            "pi_c_elastic": record.pi_c_elastic,
            "pi_c_surface": record.pi_c_surface,
            "accepted": record.accepted,
            "wall_s": record.wall_s,
            "pi_nc_total": record.pi_nc_total,
            "pi_c_total": record.pi_c_total,
            "max_d": record.max_d,
            "stagger_iterations": record.stagger_iterations,
            "crack_sets": ";".join(record.crack_sets),
        }


def write_trace_csv(trace, path):
    """
    Write the per-step energies and decisions as CSV.

    Args:
        trace (RunTrace): the run history
        path (str): destination file

    """
    with open(path, "w", newline="") as csv_file:
        writer = csv.DictWriter(csv_file, fieldnames=TRACE_CSV_COLUMNS)
        writer.writeheader()
        for row in trace_rows(trace):
            writer.writerow({key: _cell(value) for key, value in row.items()})


def summary(trace, config=None, extra=None):
    """
    Milestones of a run as a JSON-serializable dict.

    Args:
        trace (RunTrace): the run history
        config (dict): the validated run configuration, echoed for reproducibility
        extra (dict): further entries (theoretical loads, config checksum, ...)

    """
    data = {
        "version": __version__,
        "driver": trace.driver,
        "steps": len(trace.records),
        "vigilance_load": trace.vigilance_load,
        "critical_load": trace.critical_load,
        "nucleation_load": trace.nucleation_load,
        "boundary_arrivals": dict(trace.boundary_arrivals),
        "retraces": [
            {
                "from_step": event.from_step,
                "from_load": event.from_load,
                "to_step": event.to_step,
                "to_load": event.to_load,
            }
            for event in trace.retraces
        ],
        "guess_gc_stages": trace.guess_gc_stages,
        "guess_failure": trace.guess_failure,
        "monotonicity_violations": trace.monotonicity_violations,
        "stopped_on_fracture": trace.stopped_on_fracture,
        "aborted": trace.aborted,
        "abort_reason": trace.abort_reason,
        "wall_s": trace.wall_s,
        "normalized_energies": [list(row) for row in trace.normalized_energies()],
    }
    if extra:
        data.update(extra)
    if config is not None:
        data["config"] = config
    return data


def write_summary(trace, path, config=None, extra=None):
    """
    Write :func:`summary` as indented JSON.

    Args:
        trace (RunTrace): the run history
        path (str): destination file
        config (dict): the run configuration
        extra (dict): further entries

    """
    with open(path, "w") as summary_file:
        json.dump(summary(trace, config, extra), summary_file, indent=2, sort_keys=True)
        summary_file.write("\n")


class FieldDumper:
    """
    Driver observer that writes VTK files every ``stride`` steps and at milestones.

    Milestones are the vigilance step, the acceptance step, the final step and the cracked
    initial guess.

    Args:
        mesh (Mesh): the mesh
        directory (str): output directory
        stride (int): dump every ``stride``-th step; 0 dumps milestones only

    """

    def __init__(self, mesh, directory, stride):
        self.mesh = mesh
        self.directory = directory
        self.stride = int(stride)
        self.written = []
        os.makedirs(directory, exist_ok=True)

    def _write(self, name, state):
        path = os.path.join(self.directory, name)
        write_vtk(self.mesh, state, path)
        self.written.append(path)
        log.debug(_("Wrote {}").format(path))

    def on_step(self, record, state, events):
        periodic = self.stride > 0 and record.step % self.stride == 0
        if periodic or events:
            self._write("fields_{:05d}.vtk".format(record.step), state)

    def on_cracked_guess(self, u_b, state):
        self._write("cracked_guess.vtk", state)
