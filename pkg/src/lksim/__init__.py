"""Lanchester attrition driven by Kuramoto-Sakaguchi decision cycles.

Three model tiers share one adaptive integrator:

* :mod:`lksim.global_model` - homogeneous forces, scalar populations.
* :mod:`lksim.reduced_model` - the phase-gap surrogate and its closed forms.
* :mod:`lksim.network_model` - per-node populations with manoeuvre and
  engagement networks.

:mod:`lksim.harness` holds the built-in scenarios, sweeps and the CLI.
"""

__version__ = "0.1.0"
