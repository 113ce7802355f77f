import math
import cmath
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.integrate import quad, IntegrationWarning

from .params import saturation, reduced_params
from .utils import RegimeError, QuadratureFailure, require

# below this |δ| the auxiliaries are evaluated from their δ² series
series_threshold = 1e-4

def spin_operators(N):
   """
   The L-spin of the sector with N excitations in the photon-number basis
   m = 0..N, where L_z|m> = (m - N/2)|m>. Returns (L_x, L_y, L_z).
   """
   m = np.arange(N+1)
   Lp = np.zeros((N+1,N+1))
   Lp[m[:-1]+1,m[:-1]] = np.sqrt((N-m[:-1])*(m[:-1]+1))
   Lx = (Lp + Lp.T)/2
   Ly = (Lp - Lp.T)/(2j)
   Lz = np.diag(m - N/2)
   return Lx, Ly, Lz

def auxiliaries(alpha,beta):
   """
   The auxiliary quantities ζ and z of the closed matrix element for the
   complex arguments α and β. Both depend on δ only through δ², so no branch
   of the square root is needed.
   """
   d2 = alpha**2 + beta**2
   if abs(d2)<series_threshold**2:
      h = 0.5 - d2/48 + d2**2/3840
      cosine = 1 - d2/8 + d2**2/384
   else:
      delta = cmath.sqrt(d2)
      h = cmath.sin(delta/2)/delta
      cosine = cmath.cos(delta/2)
   zeta = 1j*alpha*h/(cosine - 1j*beta*h)
   z = -1/(alpha**2*h**2)
   return zeta, z

def matrix_element_closed(alpha,beta,n):
   """
   <A,n,n-1| exp(i(αL_x + βL_z)) |A,n,n> = √n z^{-n/2} ζ^{n-1} (1+z)^{n-1}

   Only the modulus is certified; the global phase depends on the branch
   taken for z^{-1/2}.
   """
   require(int(n)==n and n>=1,'must be at least one','n')
   alpha = complex(alpha)
   beta = complex(beta)
   if alpha==0:
      return 0j
   zeta, z = auxiliaries(alpha,beta)
   root = 1/cmath.sqrt(z)
   return math.sqrt(n)*root**n*zeta**(n-1)*(1+z)**(n-1)

def matrix_element_bruteforce(alpha,beta,n):
   Lx, _, Lz = spin_operators(n)
   U = expm(1j*(alpha*Lx + beta*Lz))
   return complex(U[n-1,n])

def _overdamped(A,n,omega,gamma):
   S = saturation(A,n,omega,gamma)
   if S>=1:
      raise RegimeError(f'Transition amplitude for A={A}, n={n} requires the over-damped regime',saturation=S)
   s = math.sqrt(1 - S)
   return S, s, S/(1 + s)

def psi_exact(A,n,tau,omega,gamma):
   """
   The resonant transition amplitude Ψ_{n-1,n}^{A,n}(τ) in the over-damped
   regime. The growing hyperbolic factors are cancelled against the
   exp(-γnτ/4) prefactor so that large τ does not overflow.
   """
   require(n>=1,'must be at least one','n')
   S, s, one_minus_s = _overdamped(A,n,omega,gamma)
   tau = np.asarray(tau,dtype=float)
   if S==0:
      return np.zeros(tau.shape,dtype=complex)[()]
   x = gamma*tau*s/4
   decay = np.exp(-2*x)
   magnitude = math.sqrt(n*gamma*S)*(1 - S)**(-n/2)*2.0**(-n) \
             * np.exp(-gamma*n*tau*one_minus_s/4) \
             * ((1 + s) - one_minus_s*decay)**(n-1) \
             * -np.expm1(-2*x)
   phase = -1j*(-1)**(n-1)
   return np.asarray(phase*magnitude)[()]

def psi_lowest_order(A,n,tau,omega,gamma):
   """
   The lowest-order form of the amplitude for S ≪ 1,
   i(-1)^n √(Snγ) exp(-γτ[n-(n-1)√(1-S)]/4) sinh(γτ√(1-S)/4).
   """
   require(n>=1,'must be at least one','n')
   S, s, one_minus_s = _overdamped(A,n,omega,gamma)
   tau = np.asarray(tau,dtype=float)
   x = gamma*tau*s/4
   magnitude = math.sqrt(S*n*gamma) \
             * np.exp(-gamma*n*tau*one_minus_s/4) \
             * -np.expm1(-2*x)/2
   phase = 1j*(-1)**n
   return np.asarray(phase*magnitude)[()]

class WaitingTimeDensity:
   """
   The renormalized atom waiting-time density with n_eff remaining
   excitations: the sum of three independent exponential stages with rates
   (n_eff + jq)/τ₀, j = 0, 1, 2. An infinite q collapses it to the single
   stage n_eff/τ₀.
   """

   def __init__(self,n_eff,q,tau0):
      require(n_eff>=1,'must be at least one','n_eff')
      require(q>0,'must be positive','q')
      require(tau0>0,'must be positive','tau0')
      self._n_eff = n_eff
      self._q = q
      self._tau0 = tau0
      self._single = math.isinf(q)
      if self._single:
         self._rates = (n_eff/tau0,)
         self._norm = n_eff/tau0
      else:
         self._rates = tuple((n_eff + j*q)/tau0 for j in range(3))
         spacing = q/tau0
         self._norm = self._rates[0]*self._rates[1]*self._rates[2]/(2*spacing**2)

   @property
   def n_eff(self):
      return self._n_eff

   @property
   def q(self):
      return self._q

   @property
   def tau0(self):
      return self._tau0

   @property
   def rates(self):
      """
      The stage rates in 1/s.
      """
      return self._rates

   @property
   def normalization(self):
      """
      The constant c in w(t) = c exp(-λ₀t)(1 - exp(-qt/τ₀))².
      """
      return self._norm

   def __call__(self,t):
      return self.pdf(t)

   def pdf(self,t):
      t = np.asarray(t,dtype=float)
      if self._single:
         value = self._norm*np.exp(-self._rates[0]*t)
      else:
         value = self._norm*np.exp(-self._rates[0]*t)*np.expm1(-self._q/self._tau0*t)**2
      return np.where(t<0,0.0,value)[()]

   def survival(self,t):
      t = np.asarray(t,dtype=float)
      if self._single:
         value = np.exp(-self._rates[0]*t)
      else:
         l0, l1, l2 = self._rates
         d = self._q/self._tau0
         e = np.exp(-d*t)
         value = np.exp(-l0*t)*(l1*l2/(2*d**2) - l0*l2/d**2*e + l0*l1/(2*d**2)*e**2)
      return np.where(t<0,1.0,np.clip(value,0.0,1.0))[()]

   def cdf(self,t):
      return 1 - self.survival(t)

   def mean(self):
      return sum(1/rate for rate in self._rates)

   def variance(self):
      return sum(1/rate**2 for rate in self._rates)

def waiting_density(n_eff,q,tau0):
   return WaitingTimeDensity(n_eff,q,tau0)

def waiting_density_for(A,n,omega,gamma):
   """
   The waiting-time density of |Ψ_{n-1,n}^{A,n}|² in lowest order, with q
   and τ₀ taken from S_{A,n}.
   """
   S = saturation(A,n,omega,gamma)
   reduced = reduced_params(S,gamma,0.0)
   return WaitingTimeDensity(n,reduced.q,reduced.tau0)

@dataclass
class TransitionProbability:
   value : float
   error : float

   @property
   def deviation(self):
      return 1 - self.value

def transition_probability_integral(A,n,omega,gamma,segments=60):
   """
   Integrates |Ψ_{n-1,n}^{A,n}(t)|² over t ≥ 0 on a geometric grid that
   resolves both the 1/γ rise and the slow τ₀ decay.
   """
   if omega==0:
      return TransitionProbability(0.0,0.0)
   S, s, one_minus_s = _overdamped(A,n,omega,gamma)
   slow = gamma*n*one_minus_s/2
   edges = np.unique(np.concatenate([[0.0],np.geomspace(0.01/gamma,80/slow,segments)]))
   f = lambda t: abs(psi_exact(A,n,t,omega,gamma))**2
   total = 0.0
   error = 0.0
   with warnings.catch_warnings():
      warnings.simplefilter('error',IntegrationWarning)
      for start, end in zip(edges[:-1],edges[1:]):
         try:
            value, abserr = quad(f,start,end,epsabs=1e-15,epsrel=1e-10,limit=200)
         except IntegrationWarning as ex:
            raise QuadratureFailure(f'Quadrature of |psi|^2 did not converge on [{start:.6g},{end:.6g}]: {ex}')
         total += value
         error += abserr
   logging.debug(f'P_(n-1,n) for A={A}, n={n}, S={S:.6g}: {total:.15g} ± {error:.3g}')
   return TransitionProbability(total,error)
