import os
import math
import logging
from dataclasses import dataclass

import numpy as np
import mpmath
from scipy.linalg import expm
from scipy.special import gammaln, loggamma, xlogy, xlog1py

from .model import CountDistribution, Moments, Method
from .utils import PartialFractionInstability, OracleDisagreement, total_variation, require

# q values for which the closed-form statistics have been checked against both oracles
validated_q_range = (1.0, 1e7)

# poles closer than this (in units of 1/τ₀) are merged into one confluent pole
degenerate_threshold = 1e-8

# cancellation beyond this many digits marks a route disagreement as instability
instability_digits = 6

def default_guard_digits():
   return int(os.environ.get('BOSECOUNT_GUARD_DIGITS',30))

@dataclass(frozen=True)
class LaplaceRational:
   """
   A rational Laplace transform with simple poles at z = -λ_j, stored as the
   rates λ_j with their residues. Waiting-time transforms also carry the
   factored form Π λ/(z+λ).
   """
   rates : tuple
   residues : tuple
   factors : tuple = None

   @property
   def poles(self):
      return tuple(-rate for rate in self.rates)

   def __call__(self,z):
      if self.factors is not None:
         value = 1
         for rate in self.factors:
            value = value*rate/(z + rate)
         return value
      return sum(r/(z + rate) for rate, r in zip(self.rates,self.residues))

   def inverse(self,t):
      """
      The time-domain function Σ r_j exp(-λ_j t) for t ≥ 0.
      """
      t = np.asarray(t,dtype=float)
      value = np.zeros(t.shape)
      for rate, r in zip(self.rates,self.residues):
         value = value + r*np.exp(-rate*t)
      return value[()]

def _validate(q,n):
   require(int(n)==n and n>=0,'must be a non-negative integer','n')
   require(q>0,'must be positive (or inf)','q')

def level_rates(k,n,q,tau0=1.0):
   """
   The stage rates (n-k+jq)/τ₀ of the wait for escape k+1. The q = ∞
   sentinel leaves the single stage (n-k)/τ₀.
   """
   if math.isinf(q):
      return ((n - k)/tau0,)
   return tuple((n - k + j*q)/tau0 for j in range(3))

def _density_residues(rates):
   gain = math.prod(rates)
   return tuple(gain/math.prod(other - rate for j, other in enumerate(rates) if j!=i) for i, rate in enumerate(rates))

def _survival_residues(rates):
   return tuple(math.prod(other/(other - rate) for j, other in enumerate(rates) if j!=i) for i, rate in enumerate(rates))

def waiting_laplace(k,n,q,tau0):
   """
   The transform of the renormalized waiting time for escape k+1 when n
   photons were present, Π_j (n-k+jq)/(n-k+jq+τ₀z).
   """
   _validate(q,n)
   require(tau0>0,'must be positive','tau0')
   require(0<=k<n,f'must be within [0,{n})','k')
   rates = level_rates(k,n,q,tau0)
   return LaplaceRational(rates,_density_residues(rates),factors=rates)

def survival_laplace(a,n,q,tau0):
   """
   The transform (1 - w)/z of the no-escape probability after a escapes. With
   no excitation left (a = n) nothing can escape and W ≡ 1.
   """
   _validate(q,n)
   require(tau0>0,'must be positive','tau0')
   require(0<=a<=n,f'must be within [0,{n}]','a')
   if a==n:
      return LaplaceRational((0.0,),(1.0,))
   rates = level_rates(a,n,q,tau0)
   return LaplaceRational(rates,_survival_residues(rates))

def survival_laplace_terms(a,n,q,tau0,z):
   """
   The no-escape transform written as the telescoping three-term sum
   τ₀/u + τ₀b/(u(u+q)) + τ₀b(b+q)/(u(u+q)(u+2q)) with b = n-a, u = b + τ₀z.
   """
   _validate(q,n)
   require(0<=a<=n,f'must be within [0,{n}]','a')
   if a==n:
      return 1/z
   b = n - a
   u = b + tau0*z
   if math.isinf(q):
      return tau0/u
   return tau0/u + tau0*b/(u*(u + q)) + tau0*b*(b + q)/(u*(u + q)*(u + 2*q))

def product_laplace(a,n,q,tau0,z):
   """
   The transform of P_a, Π_{k<a} w_k(z) · W_a(z), with the product over the
   waiting times collapsed into ratios of Gamma functions,
   Π_{k<a} (x-k) = Γ(x+1)/Γ(x-a+1), evaluated through the complex log-Gamma.
   """
   _validate(q,n)
   require(0<=a<=n,f'must be within [0,{n}]','a')
   shifts = [0.0] if math.isinf(q) else [0.0,q,2*q]
   y = complex(tau0*z)
   log_value = 0j
   for shift in shifts:
      x = n + shift
      log_value += loggamma(x + 1) - loggamma(x - a + 1) - loggamma(x + y + 1) + loggamma(x + y - a + 1)
   return np.exp(log_value)*survival_laplace(a,n,q,tau0)(z)

def counting_chain(q,n):
   """
   The generator (in units of 1/τ₀, row convention) of the pure-death chain
   whose state is (escapes so far, stage of the current wait). Each of the n
   levels has three stages (one for q = ∞) and the last state absorbs.
   """
   _validate(q,n)
   stages = 1 if math.isinf(q) else 3
   size = stages*n + 1
   Q = np.zeros((size,size))
   for k in range(n):
      for j, rate in enumerate(level_rates(k,n,q)):
         state = stages*k + j
         Q[state,state] = -rate
         Q[state,state+1] = rate
   return Q

def binomial_probabilities(n,eta):
   a = np.arange(n+1)
   log_coefficients = gammaln(n + 1) - gammaln(a + 1) - gammaln(n - a + 1)
   return np.exp(log_coefficients + xlogy(a,eta) + xlog1py(n - a,-eta))

def _delta(n,a):
   P = np.zeros(n+1)
   P[a] = 1.0
   return P

def _check_q_range(q):
   if not math.isinf(q) and not (validated_q_range[0]<=q<=validated_q_range[1]):
      logging.warning(f'q={q:.6g} is outside the validated range [{validated_q_range[0]:g},{validated_q_range[1]:g}]')

def count_distribution(q,p,n):
   """
   The conditional atom-count statistics P_a(q,p|n), a = 0..n, from the
   transient occupation of the counting chain at τ/τ₀ = -ln(1-p).
   """
   _validate(q,n)
   require(0<=p<=1,'must be within [0,1]','p')
   n = int(n)
   _check_q_range(q)
   if n==0 or p==0:
      P = _delta(n,0)
   elif p==1:
      P = _delta(n,n)
   elif math.isinf(q):
      P = binomial_probabilities(n,p)
   else:
      T = -math.log1p(-p)
      occupation = np.clip(expm(counting_chain(q,n)*T)[0],0.0,None)
      P = np.empty(n+1)
      P[:n] = occupation[:-1].reshape(n,3).sum(axis=1)
      P[n] = occupation[-1]
      logging.debug(f'Counting chain q={q:.6g}, p={p:.6g}, n={n}: normalization error {abs(P.sum()-1):.3g}')
   return CountDistribution(n,P,q=q,p=p)

def count_distributions(q,p,n_max):
   """
   The matrix of P_a(q,p|n) with rows n = 0..n_max from one propagation.
   Level k of the n_max chain has n_max-k excitations left, so the chain
   for n photons is the same chain entered at level n_max-n.
   """
   _validate(q,n_max)
   require(0<=p<=1,'must be within [0,1]','p')
   n_max = int(n_max)
   _check_q_range(q)
   R = np.zeros((n_max+1,n_max+1))
   if p==0:
      R[:,0] = 1.0
   elif p==1:
      R[np.arange(n_max+1),np.arange(n_max+1)] = 1.0
   elif math.isinf(q):
      for n in range(n_max+1):
         R[n,:n+1] = binomial_probabilities(n,p)
   else:
      T = -math.log1p(-p)
      E = np.clip(expm(counting_chain(q,n_max)*T),0.0,None)
      levels = E[:,:-1].reshape(3*n_max+1,n_max,3).sum(axis=2)
      for n in range(n_max+1):
         start = n_max - n
         R[n,:n] = levels[3*start,start:]
         R[n,n] = E[3*start,-1]
      logging.debug(f'Counting chain q={q:.6g}, p={p:.6g} for all n <= {n_max}')
   return R

def _clusters(rates,threshold):
   """
   Groups the sorted rates into (rate, multiplicity) pairs, merging neighbours
   closer than the threshold.
   """
   groups = []
   for rate in sorted(rates):
      if groups and rate - groups[-1][-1]<threshold:
         groups[-1].append(rate)
      else:
         groups.append([rate])
   return [(mpmath.fsum(group)/len(group),len(group)) for group in groups]

def _hypoexponential_cdf(rates,T,threshold):
   """
   The probability that the sum of independent exponential stages with the
   given rates is at most T, as the inverse of Π λ/(z(z+λ)) by partial
   fractions. Confluent poles take their coefficients from derivatives of the
   remaining factor. Returns the value and the largest term magnitude.
   """
   if not rates:
      return mpmath.mpf(1), mpmath.mpf(1)
   poles = [(mpmath.mpf(0),1)] + _clusters(rates,threshold)
   gain = mpmath.fprod(rate**m for rate, m in poles[1:])
   value = mpmath.mpf(0)
   largest = mpmath.mpf(0)
   for i, (rate_i, m_i) in enumerate(poles):
      z = -rate_i
      others = [pole for j, pole in enumerate(poles) if j!=i]
      # derivatives of log G at z
      h = [mpmath.fsum(m*(-1)**(l+1)*mpmath.factorial(l)/(z + rate)**(l+1) for rate, m in others) for l in range(m_i)]
      G = [gain/mpmath.fprod((z + rate)**m for rate, m in others)]
      for k in range(m_i-1):
         G.append(mpmath.fsum(mpmath.binomial(k,l)*G[l]*h[k-l] for l in range(k+1)))
      decay = mpmath.exp(-rate_i*T)
      for r in range(1,m_i+1):
         coefficient = G[m_i-r]/mpmath.factorial(m_i-r)
         term = coefficient*T**(r-1)/mpmath.factorial(r-1)*decay
         largest = max(largest,abs(term))
         value += term
   return value, largest

def count_distribution_partial_fractions(q,p,n,guard_digits=None,threshold=degenerate_threshold):
   """
   P_a(q,p|n) from the explicit inverse Laplace transform, P_a = C_a - C_{a+1}
   where C_a is the CDF of the time to the a-th escape, evaluated with
   guard_digits beyond double precision. Returns the distribution and the
   decimal digits lost to cancellation.
   """
   _validate(q,n)
   require(0<=p<=1,'must be within [0,1]','p')
   n = int(n)
   if guard_digits is None:
      guard_digits = default_guard_digits()
   require(guard_digits>=0,'must not be negative','guard_digits')
   if n==0 or p==0:
      return CountDistribution(n,_delta(n,0),q=q,p=p,method=Method.PARTIAL_FRACTIONS), 0.0
   if p==1:
      return CountDistribution(n,_delta(n,n),q=q,p=p,method=Method.PARTIAL_FRACTIONS), 0.0
   with mpmath.workdps(15 + guard_digits):
      T = -mpmath.log1p(-mpmath.mpf(p))
      mp_q = mpmath.inf if math.isinf(q) else mpmath.mpf(q)
      rates = []
      cdf = []
      largest = mpmath.mpf(1)
      for a in range(n+1):
         value, magnitude = _hypoexponential_cdf(rates,T,threshold)
         cdf.append(value)
         largest = max(largest,magnitude)
         if a<n:
            rates.extend([n - a] if math.isinf(q) else [n - a + j*mp_q for j in range(3)])
      P = [cdf[a] - cdf[a+1] for a in range(n)] + [cdf[n]]
      digits_lost = float(mpmath.log10(largest))
      probabilities = np.array([float(x) for x in P])
   if digits_lost>guard_digits:
      raise PartialFractionInstability(f'Partial fractions for q={q:.6g}, p={p:.6g}, n={n} exhausted {guard_digits} guard digits',digits_lost=digits_lost)
   if digits_lost>instability_digits:
      logging.warning(f'Partial fractions for q={q:.6g}, p={p:.6g}, n={n} lost {digits_lost:.1f} digits to cancellation')
   return CountDistribution(n,probabilities,q=q,p=p,method=Method.PARTIAL_FRACTIONS), digits_lost

@dataclass
class CrossCheck:
   distance : float
   digits_lost : float
   markov : CountDistribution
   partial_fractions : CountDistribution

def cross_check(q,p,n,tolerance=1e-8,guard_digits=None):
   """
   Compares the counting chain with the partial-fraction route. Differences
   beyond the tolerance are never accepted: they raise
   PartialFractionInstability when the partial fractions cancelled more than
   a few digits and OracleDisagreement otherwise.
   """
   markov = count_distribution(q,p,n)
   partial, digits_lost = count_distribution_partial_fractions(q,p,n,guard_digits=guard_digits)
   distance = total_variation(markov.probabilities,partial.probabilities)
   logging.info(f'Route comparison q={q:.6g}, p={p:.6g}, n={n}: TV={distance:.3e}, {digits_lost:.1f} digits lost')
   if distance>tolerance:
      if digits_lost>instability_digits:
         raise PartialFractionInstability(f'Routes differ by {distance:.3e} for q={q:.6g}, p={p:.6g}, n={n}',digits_lost=digits_lost)
      raise OracleDisagreement(f'Counting chain and partial fractions disagree for q={q:.6g}, p={p:.6g}, n={n}',distance=distance,tolerance=tolerance)
   return CrossCheck(distance,digits_lost,markov,partial)

def moments(dist):
   probabilities = dist.probabilities if isinstance(dist,CountDistribution) else np.asarray(dist,dtype=float)
   a = np.arange(len(probabilities))
   mean = float(np.dot(a,probabilities))
   variance = float(np.dot((a - mean)**2,probabilities))
   fano = 1.0 if mean==0 else variance/mean
   return Moments(mean,variance,fano)

def efficiency(q,p,n):
   """
   η_D = ā_n/n, the mean atom count per incident photon.
   """
   require(int(n)==n and n>=1,'must be at least one','n')
   return moments(count_distribution(q,p,n)).mean/n
