"""Exact computer algebra for symmetric elliptic difference modules.

The package is organised by mathematical layer:

* ``fields``, ``linalg``  exact scalars and matrices over Q and F_p
* ``curve``, ``symbolic``  concrete Weierstrass curves and the symbolic orbit backend
* ``dihedral``  the infinite dihedral group and its action on symbolic points
* ``divisor``  antisymmetric divisors, H-generators and canonical forms
* ``quotring``  registered quotient rings, module presentations, Hom and iso solvers
* ``localtype``  formal local types of rank-1 modules, submodules and Ext
* ``descent``  Z/2 descent, conductor gluing and difference-module translation
* ``gluing``  induced modules and the local/global gluing functors
"""

__version__ = "0.1.0"
