import math
import logging
from dataclasses import dataclass, fields

import yaml
from scipy.constants import hbar, c as speed_of_light

from .utils import ConfigurationError, RegimeError, require

@dataclass(frozen=True)
class PhysicalConfig:
   """
   Experimental inputs in SI units. The transverse overlap and the dipole
   matrix element are folded into the (vacuum) Rabi frequency.
   """
   atom_mass : float
   trap_frequency : float
   photon_wavenumber : float = None
   rabi_frequency : float = 0.0
   detuning : float = 0.0
   atom_number : int = 1
   transition_frequency : float = None

   def __post_init__(self):
      require(self.atom_mass>0,'must be positive','atom_mass')
      require(self.trap_frequency>=0,'must not be negative','trap_frequency')
      require(self.photon_wavenumber is None or self.photon_wavenumber>0,'must be positive','photon_wavenumber')
      require(self.rabi_frequency>=0,'must not be negative','rabi_frequency')
      require(math.isfinite(self.detuning),'must be finite','detuning')
      require(int(self.atom_number)==self.atom_number and self.atom_number>=1,'must be a positive integer','atom_number')
      require(self.transition_frequency is None or self.transition_frequency>0,'must be positive','transition_frequency')

@dataclass(frozen=True)
class TrapScales:
   ground_spread : float
   lamb_dicke : float
   group_velocity : float
   escape_rate : float
   group_velocity_approx : float
   escape_rate_approx : float

@dataclass(frozen=True)
class ReducedParams:
   q : float
   tau0 : float
   p : float

@dataclass(frozen=True)
class DetectorParams:
   ground_spread : float
   lamb_dicke : float
   group_velocity : float
   escape_rate : float
   saturation : float
   q : float = None
   tau0 : float = None
   escape_probability : float = None
   escape_rate_estimate : float = None
   overdamped : bool = True

   def save(self):
      return {f.name : getattr(self,f.name) for f in fields(self)}

def derive_trap_scales(cfg):
   """
   The ground-level spread, Lamb-Dicke parameter, group velocity of the
   excited wave packet and the resulting escape rate. The rate follows the
   time of flight over one ground-level spread, γ = 2π v_g/δx₀.
   """
   require(cfg.atom_mass>0,'must be positive','atom_mass')
   require(cfg.trap_frequency>0,'must be positive to define a ground level','trap_frequency')
   require(cfg.photon_wavenumber is not None and cfg.photon_wavenumber>0,'must be positive','photon_wavenumber')
   m = cfg.atom_mass
   k0 = cfg.photon_wavenumber
   dx0 = math.sqrt(hbar/(2*m*cfg.trap_frequency))
   eta = k0*dx0
   bracket = 1 + (2*eta)**-2
   v_g_approx = hbar*k0/(2*m)
   gamma_approx = math.pi*hbar*k0**2/(m*eta)
   return TrapScales(
      ground_spread=dx0,
      lamb_dicke=eta,
      group_velocity=v_g_approx*bracket,
      escape_rate=gamma_approx*bracket,
      group_velocity_approx=v_g_approx,
      escape_rate_approx=gamma_approx
   )

def trap_scales_approx(cfg):
   scales = derive_trap_scales(cfg)
   return scales.group_velocity_approx, scales.escape_rate_approx

def resonance_wavenumber(cfg):
   """
   The photon wavenumber in resonance with the recoil-shifted transition,
   c k₀ = ω_eg − ν/4.
   """
   if cfg.transition_frequency is None:
      raise ConfigurationError('required for the resonance condition',field='transition_frequency')
   return (cfg.transition_frequency - cfg.trap_frequency/4)/speed_of_light

def collective_number(A,N):
   return A - (N-1)/2

def saturation(A,N,omega,gamma,detuning=0.0):
   """
   S_{A,N} = 4|Ω|²M_{A,N}/(Δ² + (γ/2)²) with M_{A,N} = A − (N−1)/2.
   """
   require(A>=1,'must be at least one','atom_number')
   require(N>=0,'must not be negative','N')
   M = collective_number(A,N)
   if M<=0:
      raise RegimeError(f'M_{{A,N}}={M} is not positive for A={A}, N={N}')
   denominator = detuning**2 + (gamma/2)**2
   require(denominator>0,'escape rate and detuning cannot both vanish','escape_rate')
   return 4*omega**2*M/denominator

def rabi_for_saturation(S,A,gamma,N=1,detuning=0.0):
   """
   The Rabi frequency that produces the saturation S for the sector (A,N).
   """
   require(S>=0,'must not be negative','saturation')
   M = collective_number(A,N)
   if M<=0:
      raise RegimeError(f'M_{{A,N}}={M} is not positive for A={A}, N={N}')
   return math.sqrt(S*(detuning**2 + (gamma/2)**2)/(4*M))

def saturation_from_q(q):
   if math.isinf(q):
      return 0.0
   require(q>0,'must be positive','q')
   return (1 + 2*q)/(1 + q)**2

def reduced_params(S,gamma,tau):
   """
   The shape coefficient q, the escape time scale τ₀ and the escape
   probability p = 1 − exp(−τ/τ₀) of the over-damped regime.
   """
   require(S>=0,'must not be negative','saturation')
   require(gamma>0,'must be positive','escape_rate')
   require(tau>=0,'must not be negative','tau')
   if S>=1:
      raise RegimeError('Rabi regime is not supported by the over-damped counting statistics',saturation=S)
   if S==0:
      return ReducedParams(q=math.inf,tau0=math.inf,p=0.0)
   s = math.sqrt(1 - S)
   # 1 - s without cancellation
   one_minus_s = S/(1 + s)
   q = s/one_minus_s
   tau0 = 2/(gamma*one_minus_s)
   p = 1.0 if math.isinf(tau) else -math.expm1(-tau/tau0)
   return ReducedParams(q=q,tau0=tau0,p=p)

def tau_for_probability(p,tau0):
   require(0<=p<=1,'must be within [0,1]','p')
   if p==1:
      return math.inf
   return -tau0*math.log1p(-p)

def recoil_condition(cfg,N=1):
   """
   The over-damped condition written as recoil energy against the
   collective coupling energy.
   """
   scales = derive_trap_scales(cfg)
   recoil = (hbar*cfg.photon_wavenumber)**2/(2*cfg.atom_mass)
   coupling = scales.lamb_dicke/math.pi*2*hbar*cfg.rabi_frequency*math.sqrt(collective_number(cfg.atom_number,N))
   return recoil>coupling

def detector_params(cfg,tau,N=1,strict=True):
   scales = derive_trap_scales(cfg)
   S = saturation(cfg.atom_number,N,cfg.rabi_frequency,scales.escape_rate,cfg.detuning)
   estimate = 4*cfg.rabi_frequency**2*cfg.atom_number/scales.escape_rate
   if S>=1:
      if strict:
         raise RegimeError('the over-damped regime is violated',saturation=S)
      logging.warning(f'S={S:.6g} >= 1: the over-damped regime is violated, q, tau0 and p are undefined')
      return DetectorParams(
         ground_spread=scales.ground_spread,
         lamb_dicke=scales.lamb_dicke,
         group_velocity=scales.group_velocity,
         escape_rate=scales.escape_rate,
         saturation=S,
         escape_rate_estimate=estimate,
         overdamped=False
      )
   reduced = reduced_params(S,scales.escape_rate,tau)
   return DetectorParams(
      ground_spread=scales.ground_spread,
      lamb_dicke=scales.lamb_dicke,
      group_velocity=scales.group_velocity,
      escape_rate=scales.escape_rate,
      saturation=S,
      q=reduced.q,
      tau0=reduced.tau0,
      escape_probability=reduced.p,
      escape_rate_estimate=estimate
   )

config_fields = {f.name : f for f in fields(PhysicalConfig)}

def load_config(path=None,**overrides):
   """
   Loads a flat key/value (YAML or JSON) file whose keys are the
   PhysicalConfig field names. Overrides that are not None take precedence.
   """
   values = {}
   if path is not None:
      try:
         with open(path,'r') as raw:
            loaded = yaml.safe_load(raw)
      except yaml.YAMLError as ex:
         raise ConfigurationError(f'Cannot parse configuration {path}: {ex}')
      if loaded is None:
         loaded = {}
      if not isinstance(loaded,dict):
         raise ConfigurationError(f'Configuration {path} is not a flat mapping')
      values.update(loaded)
   for key, value in overrides.items():
      if value is not None:
         values[key] = value
   for key in values:
      if key not in config_fields:
         raise ConfigurationError('unknown configuration key',field=key)
   for key in ['atom_mass','trap_frequency']:
      if key not in values:
         raise ConfigurationError('is required',field=key)
   converted = {}
   for key, value in values.items():
      try:
         converted[key] = float(value)
      except (TypeError,ValueError):
         raise ConfigurationError(f'cannot convert {value!r} to a number',field=key)
   if 'atom_number' in converted:
      if not converted['atom_number'].is_integer():
         raise ConfigurationError('must be a positive integer',field='atom_number')
      converted['atom_number'] = int(converted['atom_number'])
   cfg = PhysicalConfig(**converted)
   if cfg.photon_wavenumber is None and cfg.transition_frequency is not None:
      k0 = resonance_wavenumber(cfg)
      logging.info(f'Using the resonance wavenumber k0={k0:.12g} 1/m')
      cfg = PhysicalConfig(**{**converted,'photon_wavenumber':k0})
   return cfg
