"""LEO downlink precoding under delayed CSI.

Constellation geometry and handover, time-correlated Rician UPA channels,
a delayed-observation MDP and a DDPG agent that learns transmit precoding
matrices, with zero-forcing / MRT / random reference precoders.
"""

from .agent import DDPGAgent, DDPGConfig, ReplayBuffer, TrainingLog, train
from .baselines import BaselineKind, evaluate_baseline, mrt_precoder, zf_precoder
from .channel import ChannelConfig, ChannelSimulator, UpaGeometry, \
    coherence_time, fspl, noise_power, sample_channel, sat_doppler, \
    steering_vector, upa_response
from .env import DelayedCsiEnv, EnvConfig, Transition, action_to_precoder, \
    compute_delay_steps, precoder_to_action, project_action
from .nn import Adam, Mlp, build_actor, build_critic, load_networks, \
    save_networks, soft_update
from .orbits import ConstellationSpec, GroundUser, HandoverPolicy, LayerSpec, \
    SatelliteState, propagate, select_and_handover, slant_geometry
from .rate import Precoder, RateReport, lmmse_gain, \
    lower_bound_identity_check, sum_rate

__version__ = "0.1.0"
