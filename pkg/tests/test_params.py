import math

import pytest
from numpy.testing import assert_allclose
from scipy.constants import hbar, c

from bosecount.params import PhysicalConfig, derive_trap_scales, trap_scales_approx, resonance_wavenumber, saturation, saturation_from_q, rabi_for_saturation, reduced_params, tau_for_probability, recoil_condition, detector_params, load_config
from bosecount.utils import ConfigurationError, RegimeError

rb87_mass = 1.443160648e-25
trap_frequency = 2*math.pi*1e3
wavenumber = 2*math.pi/780.241e-9

def rubidium(**kwargs):
   values = dict(atom_mass=rb87_mass,trap_frequency=trap_frequency,photon_wavenumber=wavenumber)
   values.update(kwargs)
   return PhysicalConfig(**values)

def test_trap_scales():
   cfg = rubidium()
   scales = derive_trap_scales(cfg)
   assert_allclose(scales.ground_spread,math.sqrt(hbar/(2*rb87_mass*trap_frequency)),rtol=1e-14)
   assert_allclose(scales.lamb_dicke,wavenumber*scales.ground_spread,rtol=1e-14)
   # the escape rate is the inverse time of flight over one ground-level spread
   assert_allclose(scales.escape_rate,2*math.pi*scales.group_velocity/scales.ground_spread,rtol=1e-12)
   assert scales.lamb_dicke>1

def test_trap_scales_approx():
   cfg = rubidium()
   scales = derive_trap_scales(cfg)
   v_g, gamma = trap_scales_approx(cfg)
   correction = (2*scales.lamb_dicke)**-2
   assert_allclose(scales.group_velocity/v_g,1 + correction,rtol=1e-12)
   assert_allclose(scales.escape_rate/gamma,1 + correction,rtol=1e-12)
   assert_allclose(v_g,hbar*wavenumber/(2*rb87_mass),rtol=1e-14)

def test_trap_scales_require_trap():
   with pytest.raises(ConfigurationError):
      derive_trap_scales(rubidium(trap_frequency=0.0))

def test_resonance_wavenumber():
   omega_eg = 2*math.pi*384.2304844685e12
   cfg = rubidium(transition_frequency=omega_eg)
   assert_allclose(resonance_wavenumber(cfg),(omega_eg - trap_frequency/4)/c,rtol=1e-15)
   with pytest.raises(ConfigurationError):
      resonance_wavenumber(rubidium())

def test_saturation():
   assert_allclose(saturation(100,1,0.1,2.0),4.0,rtol=1e-14)
   # M_{A,N} = A - (N-1)/2
   assert_allclose(saturation(100,3,0.1,2.0),4*0.01*99,rtol=1e-14)
   assert_allclose(saturation(100,1,0.1,2.0,detuning=1.0),4*0.01*100/2,rtol=1e-14)
   assert saturation(100,1,0.0,2.0)==0.0
   with pytest.raises(RegimeError):
      saturation(1,4,0.1,1.0)

def test_rabi_for_saturation():
   for S in [1e-4,0.02,0.18,0.9]:
      omega = rabi_for_saturation(S,200,3.0,N=2)
      assert_allclose(saturation(200,2,omega,3.0),S,rtol=1e-12)

def test_reduced_params():
   gamma = 2.0
   for S in [1e-12,1e-6,0.02,0.18,0.5,0.99]:
      reduced = reduced_params(S,gamma,1.0)
      assert_allclose(saturation_from_q(reduced.q),S,rtol=1e-9)
      s = math.sqrt(1 - S)
      assert_allclose(reduced.tau0,2*(1 + s)/(gamma*S),rtol=1e-12)
      assert_allclose(reduced.p,-math.expm1(-1.0/reduced.tau0),rtol=1e-12)

def test_reduced_params_small_saturation():
   # 1 - √(1-S) without cancellation
   reduced = reduced_params(1e-14,1.0,1.0)
   assert_allclose(reduced.q,2e14,rtol=1e-6)
   assert_allclose(reduced.tau0,4e14,rtol=1e-6)
   assert reduced.p>0

def test_reduced_params_limits():
   reduced = reduced_params(0.0,1.0,5.0)
   assert math.isinf(reduced.q) and math.isinf(reduced.tau0)
   assert reduced.p==0.0
   assert reduced_params(0.5,1.0,math.inf).p==1.0
   assert reduced_params(0.5,1.0,0.0).p==0.0
   with pytest.raises(RegimeError) as error:
      reduced_params(1.0,1.0,1.0)
   assert error.value.saturation==1.0
   with pytest.raises(ConfigurationError):
      reduced_params(-0.1,1.0,1.0)

def test_saturation_from_q():
   assert saturation_from_q(math.inf)==0.0
   assert_allclose(saturation_from_q(1.0),0.75,rtol=1e-15)
   with pytest.raises(ConfigurationError):
      saturation_from_q(0.0)

def test_tau_for_probability():
   tau0 = 3.5
   for p in [0.1,0.6,0.9,0.99]:
      tau = tau_for_probability(p,tau0)
      assert_allclose(-math.expm1(-tau/tau0),p,rtol=1e-14)
   assert tau_for_probability(1.0,tau0)==math.inf

def test_recoil_condition():
   assert recoil_condition(rubidium(rabi_frequency=0.0,atom_number=1000))
   assert not recoil_condition(rubidium(rabi_frequency=1e9,atom_number=1000))

def test_detector_params():
   scales = derive_trap_scales(rubidium())
   omega = rabi_for_saturation(0.02,1000,scales.escape_rate)
   cfg = rubidium(rabi_frequency=omega,atom_number=1000)
   params = detector_params(cfg,1e-3)
   assert params.overdamped
   assert_allclose(params.saturation,0.02,rtol=1e-10)
   assert_allclose(saturation_from_q(params.q),0.02,rtol=1e-9)
   assert 0<params.escape_probability<1
   # 4|Ω|²A/γ is the small-S limit of 1/τ₀
   assert_allclose(params.escape_rate_estimate,1/params.tau0,rtol=0.02)
   assert params.save()['saturation']==params.saturation

def test_detector_params_rabi_regime():
   scales = derive_trap_scales(rubidium())
   omega = rabi_for_saturation(4.0,10,scales.escape_rate)
   cfg = rubidium(rabi_frequency=omega,atom_number=10)
   with pytest.raises(RegimeError):
      detector_params(cfg,1e-3)
   params = detector_params(cfg,1e-3,strict=False)
   assert not params.overdamped
   assert params.q is None and params.tau0 is None and params.escape_probability is None

def test_config_validation():
   with pytest.raises(ConfigurationError) as error:
      PhysicalConfig(atom_mass=-1.0,trap_frequency=1.0)
   assert error.value.field=='atom_mass'
   with pytest.raises(ConfigurationError):
      rubidium(atom_number=2.5)

def test_load_config(tmp_path):
   path = tmp_path / 'rb87.yaml'
   path.write_text(f'atom_mass: {rb87_mass}\ntrap_frequency: {trap_frequency}\nphoton_wavenumber: {wavenumber}\natom_number: 100.0\n')
   cfg = load_config(path)
   assert cfg.atom_number==100 and isinstance(cfg.atom_number,int)
   assert cfg.photon_wavenumber==wavenumber
   cfg = load_config(path,atom_number=7,rabi_frequency=None)
   assert cfg.atom_number==7
   assert cfg.rabi_frequency==0.0

def test_load_config_json(tmp_path):
   path = tmp_path / 'rb87.json'
   path.write_text(f'{{"atom_mass": {rb87_mass}, "trap_frequency": {trap_frequency}, "transition_frequency": 2.4e15}}')
   cfg = load_config(path)
   assert_allclose(cfg.photon_wavenumber,(2.4e15 - trap_frequency/4)/c,rtol=1e-15)

def test_load_config_errors(tmp_path):
   path = tmp_path / 'bad.yaml'
   path.write_text(f'atom_mass: {rb87_mass}\ntrap_frequency: {trap_frequency}\ncolour: blue\n')
   with pytest.raises(ConfigurationError) as error:
      load_config(path)
   assert error.value.field=='colour'
   with pytest.raises(ConfigurationError) as error:
      load_config(atom_mass=rb87_mass)
   assert error.value.field=='trap_frequency'
   with pytest.raises(ConfigurationError) as error:
      load_config(atom_mass=rb87_mass,trap_frequency=trap_frequency,atom_number=10.5)
   assert error.value.field=='atom_number'
   with pytest.raises(ConfigurationError):
      load_config(atom_mass='heavy',trap_frequency=trap_frequency)

def test_q_round_trip():
   for q in [1.0,3.7,10.0,99.0,1e3,1e5,1e6]:
      assert_allclose(reduced_params(saturation_from_q(q),1.0,0.0).q,q,rtol=1e-12)

def test_small_saturation_expansions():
   gamma = 3.0
   for S in [1e-6,1e-5,1e-4,1e-3]:
      reduced = reduced_params(S,gamma,0.0)
      assert abs(reduced.q - 2/S)<=2
      leading = gamma*S/4
      assert abs(1/reduced.tau0 - leading)/leading<=S
