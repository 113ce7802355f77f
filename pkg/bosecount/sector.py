import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import CountDistribution, Method
from .params import collective_number, saturation_from_q, rabi_for_saturation, reduced_params, tau_for_probability
from .utils import ConfigurationError, RegimeError, SolverFailure, require

@dataclass(frozen=True)
class SectorBasis:
   """
   The states |A,N,m> = |A,N-m>_at ⊗ |m>_em, m = 0..N, of fixed atom number A
   and excitation number N.
   """
   A : int
   N : int

   def __post_init__(self):
      require(self.N>=0,'must not be negative','N')
      if self.N>self.A:
         raise ConfigurationError(f'N={self.N} excitations exceed A={self.A} atoms',field='N')

   @property
   def dimension(self):
      return self.N + 1

   def index(self,m):
      if m<0 or m>self.N:
         raise IndexError(f'photon number {m} outside 0..{self.N}')
      return m

   def state(self,m):
      v = np.zeros(self.dimension,dtype=complex)
      v[self.index(m)] = 1
      return v

class EffectiveHamiltonianSector:
   """
   The non-Hermitian effective Hamiltonian H_eff/ħ (in rad/s) restricted to
   one (A,N) sector.
   """

   def __init__(self,basis,matrix,omega,detuning,gamma,zero_order=False):
      self._basis = basis
      self._H = matrix
      self._omega = omega
      self._detuning = detuning
      self._gamma = gamma
      self._zero_order = zero_order

   @property
   def basis(self):
      return self._basis

   @property
   def H(self):
      return self._H

   @property
   def omega(self):
      return self._omega

   @property
   def detuning(self):
      return self._detuning

   @property
   def gamma(self):
      return self._gamma

   @property
   def zero_order(self):
      return self._zero_order

   @property
   def couplings(self):
      """
      The off-diagonal elements <m-1|H|m>, m = 1..N.
      """
      return np.diagonal(self._H,offset=1).copy()

   @property
   def anti_hermitian(self):
      return (self._H - self._H.conj().T)/2

   @property
   def hermitian(self):
      return (self._H + self._H.conj().T)/2

   def eigenvalues(self):
      return np.linalg.eigvals(self._H)

   def __len__(self):
      return self._basis.dimension

def _diagonal(A,N,detuning,gamma):
   m = np.arange(N+1)
   shifted = detuning + 0.5j*gamma
   return -shifted*(N - m - A/2) - 0.25j*gamma*A

def build_heff(A,N,omega,detuning,gamma):
   """
   Diagonal -Δ'(N-m-A/2) - iγA/4 with Δ' = Δ + iγ/2, and the coupling
   -|Ω|√((N-m+1)(A-N+m)m) between m and m-1.
   """
   basis = SectorBasis(A,N)
   H = np.diag(_diagonal(A,N,detuning,gamma)).astype(complex)
   m = np.arange(1,N+1)
   coupling = -omega*np.sqrt((N - m + 1)*(A - N + m)*m)
   H[m-1,m] = coupling
   H[m,m-1] = coupling
   return EffectiveHamiltonianSector(basis,H,omega,detuning,gamma)

def build_heff_zero_order(A,N,omega,detuning,gamma):
   """
   The large-A Hamiltonian where the coupling becomes -|Ω|√M_{A,N}√((N-m+1)m),
   i.e. -2|Ω|√M L_x.
   """
   basis = SectorBasis(A,N)
   M = collective_number(A,N)
   if M<=0:
      raise RegimeError(f'M_{{A,N}}={M} is not positive for A={A}, N={N}')
   H = np.diag(_diagonal(A,N,detuning,gamma)).astype(complex)
   m = np.arange(1,N+1)
   coupling = -omega*np.sqrt(M)*np.sqrt((N - m + 1)*m)
   H[m-1,m] = coupling
   H[m,m-1] = coupling
   return EffectiveHamiltonianSector(basis,H,omega,detuning,gamma,zero_order=True)

def jump_operator(N):
   """
   The escape operator ê from sector N to sector N-1 (atom number drops by
   one), ê|A,N,m> = √(N-m)|A-1,N-1,m>.
   """
   E = np.zeros((N,N+1))
   m = np.arange(N)
   E[m,m] = np.sqrt(N - m)
   return E

@dataclass
class ConditionalDensity:
   """
   The unnormalized a-conditioned density operators at each output time.
   blocks[a] has shape (len(times), n-a+1, n-a+1).
   """
   times : np.ndarray
   blocks : list

   def traces(self):
      return np.stack([np.real(np.trace(block,axis1=1,axis2=2)) for block in self.blocks],axis=1)

   def total(self):
      return self.traces().sum(axis=1)

def propagate(A,n,times,omega,detuning,gamma,solver_tol=1e-9,zero_order=False):
   """
   Integrates dρ_a/dt = -i(H_a ρ_a - ρ_a H_a†) + γ ê ρ_{a-1} ê† for a = 0..n
   from ρ_0 = |A,n,n><A,n,n|.
   """
   require(n>=0,'must not be negative','n')
   if n>A:
      raise ConfigurationError(f'n={n} photons exceed A={A} atoms',field='n')
   times = np.sort(np.atleast_1d(np.asarray(times,dtype=float)))
   require(np.all(times>=0),'must not be negative','tau')
   build = build_heff_zero_order if zero_order else build_heff
   hamiltonians = [build(A-a,n-a,omega,detuning,gamma).H for a in range(n+1)]
   jumps = [None] + [jump_operator(n-a+1) for a in range(1,n+1)]
   sizes = [n-a+1 for a in range(n+1)]
   offsets = np.concatenate([[0],np.cumsum([d*d for d in sizes])])

   def unpack(y):
      return [y[offsets[a]:offsets[a+1]].reshape(sizes[a],sizes[a]) for a in range(n+1)]

   def rhs(t,y):
      rho = unpack(y)
      out = np.empty_like(y)
      for a in range(n+1):
         H = hamiltonians[a]
         drho = -1j*(H @ rho[a] - rho[a] @ H.conj().T)
         if a>0:
            E = jumps[a]
            drho += gamma*(E @ rho[a-1] @ E.T)
         out[offsets[a]:offsets[a+1]] = drho.ravel()
      return out

   y0 = np.zeros(offsets[-1],dtype=complex)
   y0[sizes[0]*sizes[0]-1] = 1
   end = float(times.max())
   if end==0:
      Y = np.repeat(y0[:,None],len(times),axis=1)
   else:
      solution = solve_ivp(rhs,(0.0,end),y0,method='DOP853',t_eval=times,rtol=solver_tol,atol=solver_tol*1e-2)
      if not solution.success:
         raise SolverFailure(f'Sector propagation for A={A}, n={n} failed',solver_message=solution.message)
      logging.info(f'Sector propagation A={A}, n={n} to t={end:.6g}: {solution.nfev} evaluations')
      Y = solution.y
   blocks = []
   for a in range(n+1):
      block = Y[offsets[a]:offsets[a+1],:].T.reshape(len(times),sizes[a],sizes[a])
      blocks.append(block)
   return ConditionalDensity(times,blocks)

def exact_count_statistics(A,n,tau,omega,detuning,gamma,solver_tol=1e-9,zero_order=False):
   """
   The exact P_a(τ|n) from the sector master equation, without the
   over-damped or large-A approximations.
   """
   density = propagate(A,n,[tau],omega,detuning,gamma,solver_tol=solver_tol,zero_order=zero_order)
   P = np.clip(density.traces()[0],0.0,None)
   return CountDistribution(n,P,method=Method.EXACT)

def exact_count_statistics_reduced(A,n,q,p,gamma,detuning=0.0,solver_tol=1e-9,zero_order=False):
   """
   The exact statistics at the Rabi frequency and counting interval that give
   the reduced parameters (q,p) for a single excitation among A atoms.
   """
   require(0<q<math.inf,'must be positive and finite for the exact solution','q')
   require(0<=p<1,'must be within [0,1) for the exact solution','p')
   S = saturation_from_q(q)
   omega = rabi_for_saturation(S,A,gamma,N=1,detuning=detuning)
   tau0 = reduced_params(S,gamma,0.0).tau0
   tau = tau_for_probability(p,tau0)
   logging.debug(f'Exact statistics for q={q:.6g}, p={p:.6g}: S={S:.6g}, Ω={omega:.6g}, τ={tau:.6g}')
   dist = exact_count_statistics(A,n,tau,omega,detuning,gamma,solver_tol=solver_tol,zero_order=zero_order)
   dist.q = q
   dist.p = p
   return dist
