from newtonheight.adaptation import adapt_coordinates, check_adapted, height
from newtonheight.invariants import classify_singularity, critical_exponents, r_height
from newtonheight.newton import build_polyhedron, newton_distance, principal_face
from newtonheight.parser import parse_polynomial
from newtonheight.polynomial import BivariatePolynomial, JetTerm

__version__ = "1.0.0"
