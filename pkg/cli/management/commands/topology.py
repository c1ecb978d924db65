import logging

from django.conf import settings

from cli.base import PipelineCommand, UsageError
from netmodel.serializers import write_topology
from netmodel.services import gen_grid, gen_nsfnet, max_link_distance, perturb
from netmodel.types import RadioConfig
from nettwin.seeding import derive_seed
from trainer.types import FAMILIES

logger = logging.getLogger(__name__)

TOPOLOGY_FILE = 'topology.json'


def add_radio_arguments(parser):
    parser.add_argument('--ptx', type=float, help='Transmit power (dBm)')
    parser.add_argument('--pl0', type=float, help='Path loss at 1 m (dB)')
    parser.add_argument('--gamma', type=float, help='Path loss exponent')
    parser.add_argument('--rx-sens', type=float, help='Receiver sensitivity (dBm)')


def resolve_radio(run_config, section, options, base=None):
    base = base or RadioConfig()
    return RadioConfig(
        ptx_dbm=run_config.get(section, 'ptx', options.get('ptx'), base.ptx_dbm, float),
        pl0_db=run_config.get(section, 'pl0', options.get('pl0'), base.pl0_db, float),
        gamma=run_config.get(section, 'gamma', options.get('gamma'), base.gamma, float),
        rx_sens_dbm=run_config.get(section, 'rx_sens', options.get('rx_sens'), base.rx_sens_dbm, float),
    )


class Command(PipelineCommand):
    help = 'Build an NSFNet, grid or perturbed-grid topology and write it as JSON'
    name = 'topology'
    title = 'Topology Builder'

    def add_command_arguments(self, parser):
        parser.add_argument('--family', choices=FAMILIES, help='Topology family')
        parser.add_argument('--rows', type=int, help='Grid rows')
        parser.add_argument('--cols', type=int, help='Grid columns')
        parser.add_argument('--spacing', type=float, help='Grid spacing (m)')
        parser.add_argument('--perturb-radius', type=float, help='Node displacement radius (m)')
        parser.add_argument('--capacity', type=float, help='Link capacity (kb/s)')
        add_radio_arguments(parser)

    def resolve(self, run_config, options):
        self.family = run_config.get('topology', 'family', options.get('family'))
        if self.family is None:
            raise UsageError("--family is required (nsfnet, grid or perturbed-grid)")
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.family == 'nsfnet':
            self.capacity = run_config.get('topology', 'capacity', options.get('capacity'),
                                           settings.WIRED_CAPACITY_KBPS, float)
            return
        self.rows = run_config.get('topology', 'rows', options.get('rows'), settings.GRID_ROWS, int)
        self.cols = run_config.get('topology', 'cols', options.get('cols'), settings.GRID_COLS, int)
        self.spacing = run_config.get('topology', 'spacing', options.get('spacing'),
                                      settings.GRID_SPACING_M, float)
        self.radio = resolve_radio(run_config, 'topology', options)
        if self.family == 'perturbed-grid':
            self.perturb_radius = run_config.get(
                'topology', 'perturb_radius', options.get('perturb_radius'),
                settings.PERTURB_RADIUS_M, float)

    def run(self):
        if self.family == 'nsfnet':
            graph = gen_nsfnet(self.capacity)
        else:
            self.stdout.write(f"Radio range: {max_link_distance(self.radio):.2f} m "
                              f"at {self.radio.ptx_dbm:g} dBm")
            graph = gen_grid(self.rows, self.cols, self.spacing, self.radio)
            if self.family == 'perturbed-grid':
                graph = perturb(graph, self.perturb_radius, self.radio,
                                seed=derive_seed(self.seed, 'perturb'))
        path = write_topology(graph, self.out_dir / TOPOLOGY_FILE)
        self.stdout.write(f"  Family: {graph.family}")
        self.stdout.write(f"  Nodes: {graph.num_nodes}")
        self.stdout.write(f"  Links: {graph.num_links}")
        self.stdout.write(f"  Written to: {path}")
        return {'family': graph.family, 'nodes': graph.num_nodes, 'links': graph.num_links,
                'file': str(path)}
