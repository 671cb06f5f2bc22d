"""The KMS normalisation and its hbar expansion.

tr(Exp(-beta H_B)) is computed from the Gaussian closed form of the star
exponential and compared with the expansion of pi hbar / sinh(hbar beta nu / 2).
Dividing by 2 pi hbar gives a Laurent series whose pole is the classical
partition function 1/(beta nu).
"""

from starflow import Parameters, partition_function
from starflow.states import partition_reference

for beta, nu in [(1.0, 1.0), (0.5, 1.0), (2.0, 1.5)]:
    mu, Z = partition_function(beta, Parameters(1.0, nu, 0.0), order=6)
    ref = partition_reference(beta, nu, 6)
    print(f"beta={beta}, nu={nu}")
    print(f"  mu(1) = {mu}")
    print(f"  deviation from closed form: {mu.max_deviation(ref):.2e}")
    print(f"  Z = {Z}")
