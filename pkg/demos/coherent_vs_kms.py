"""Open evolution of the system energy under a coherent and a thermal bath.

The system oscillator is coupled to a bath oscillator. We pull H_System back
along the total quantum evolution and average out the bath, once with a
coherent (deformed delta) state and once with the KMS state at beta = 1.
The columns are constant terms of the reduced series, i.e. the energy the
bath hands to a system sitting at the origin. They follow the beat between
the two normal mode frequencies.
"""

from starflow import BathState, Parameters, hamiltonian_catalog, open_evolve

params = Parameters(1.0, 1.0, 1.5, beta=1.0)
H = hamiltonian_catalog(params, 4).system
coherent = BathState.deformed_delta(params, 0.0, 0.0, order=4)
thermal = BathState.kms(params, order=4)

print(f"nu = {params.nu}, nu_kappa = {params.nu_kappa}")
print(f"{'t':>5}  {'coherent hbar^1':>16}  {'thermal hbar^0':>15}  {'thermal hbar^2':>15}")
for k in range(9):
    t = 0.4 * k
    c = open_evolve(H, t, coherent).series.coeff(1).constant_term()
    th = open_evolve(H, t, thermal).series
    t0 = th.coeff(0).constant_term()
    t2 = th.coeff(2).constant_term()
    print(f"{t:5.1f}  {complex(c).real:16.6f}  {complex(t0).real:15.6f}  {complex(t2).real:15.6f}")
