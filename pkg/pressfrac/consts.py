from pressfrac.models.material import Material

# Units: N, mm, s. Stresses in MPa, fracture energies in mJ/mm^2.

# Cohesive bar in a pressurized chamber
BAR_MATERIAL = Material(E=4e5, nu=0.2, Gc=0.12, ell=10.0, psi_c=5.6e-5, xi=1e-8)
BAR_LENGTH = 200.0
BAR_WIDTH = 1.0
BAR_ELEMENT_SIZE = 1.0
BAR_INCREMENT = 5e-4

# Nucleation from a pressurized hole
HOLE_MATERIAL = Material(E=1.9e4, nu=0.2, Gc=7.7e-2, ell=40.0, psi_c=7.96e-4, eta=1e-3)
HOLE_RADIUS = 400.0
HOLE_PLATE_LENGTH = 5000.0
HOLE_SIGMA_H = 5.0
HOLE_SIGMA_V = 2.5
HOLE_ELEMENT_SIZE = 10.0
# geometry, length scale and mesh are shrunk by this factor at desk scale
HOLE_REDUCTION = 4.0

# Steady propagation of a pressurized crack
SURFING_MATERIAL = Material(E=3e4, nu=0.2, Gc=0.12, ell=1600.0 / 40)
SURFING_CRACK_LENGTH = 1600.0
SURFING_WIDTH = 8000.0
SURFING_HEIGHT = 4000.0
SURFING_SPEED = 400.0
# element size along the crack line relative to ell
SURFING_H_OVER_ELL = 0.25
# half-width of the refined band relative to ell
SURFING_BAND_OVER_ELL = 3.0
