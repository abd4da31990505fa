// (x, ln Γ(x)) reference values at the exact binary arguments, 50 digits rounded to 20.
pub const GAMMA_TABLE: &[(f64, f64)] = &[
    (0.001, 6.9071788853838536617),
    (0.0012298381645760629, 6.7001640531541240534),
    (0.0015125019110478193, 6.4931189449027438766),
    (0.0018601325742008375, 6.2860366629213007125),
    (0.0022876620309233054, 6.0789087552796478493),
    (0.002813454073281066, 5.871724874507738138),
    (0.0034600931936030347, 5.6644723659315137917),
    (0.004255354662482884, 5.4571357736064107941),
    (0.005233397567728141, 5.2496962510937105766),
    (0.00643623205919161, 5.0421308644991347989),
    (0.007915523822461823, 4.8344117769449455197),
    (0.00973481328947455, 4.6265053080818658434),
    (0.011972244908418046, 4.4183708710682387703),
    (0.014723923704023964, 4.2099598052342115118),
    (0.018108043303514818, 4.001214149270952685),
    (0.022269962740458532, 3.7920654429308621906),
    (0.027388450101902828, 3.5824337131524023491),
    (0.03368336120390726, 3.3722269050056507128),
    (0.041425083119765865, 3.161341175337222919),
    (0.0509461481914237, 2.9496626998895788956),
    (0.06265551738396063, 2.7370719826145669522),
    (0.07705614650005374, 2.5234521365991810552),
    (0.09476658978093032, 2.3087032751120362811),
    (0.11654756883931201, 2.0927660604360735899),
    (0.125, 2.0194183575537963453),
    (0.14333464814714184, 1.8756586606634327846),
    (0.1762784205974367, 1.6575329082614272035),
    (0.2167939292419188, 1.4387573727798289091),
    (0.25, 1.2880225246980774574),
    (0.2666214480301143, 1.2200373679078067017),
    (0.3279012322819679, 1.0025846104749157268),
    (0.40326544967188466, 0.78835234854974576927),
    (0.49595124046141126, 0.5803553568799080126),
    (0.5, 0.57236494292470008707),
    (0.6099397632882837, 0.38309848290026117013),
    (0.750127198984421, 0.20314285159162002099),
    (0.9, 0.066376239734742954426),
    (0.9225350575975836, 0.049846073835146048015),
    (0.99, 0.0058548067647097814532),
    (0.9999, 0.000057729791561193862808),
    (1.0001, -0.000057713342220471268005),
    (1.01, -0.0056903079460696505037),
    (1.1, -0.049872441259839761785),
    (1.1345688219928847, -0.063677305474800666203),
    (1.3, -0.10817480950786047846),
    (1.395336037624955, -0.11931545014731417496),
    (1.5, -0.12078223763524522235),
    (1.7, -0.095807697407065873788),
    (1.716037511479511, -0.092361510887628610616),
    (1.9, -0.038984275923083361674),
    (1.99, -0.0041955290887916687019),
    (1.999, -0.00042246180069210728418),
    (2.0001, 0.000042281658112919946317),
    (2.01, 0.0042600229070983458338),
    (2.1, 0.045437738544485179002),
    (2.1104484234616363, 0.050541791183749657115),
    (2.3, 0.1541894549596304745),
    (2.5, 0.28468287047291915963),
    (2.5955100155425046, 0.35404439089467095874),
    (2.7, 0.43482055365510467324),
    (3.192057273653582, 0.87748288931820984852),
    (3.7, 1.4280723266653881292),
    (3.925713858651793, 1.6992359894966250262),
    (4.4, 2.3161034914248577576),
    (4.827992726575134, 2.9223069050219759352),
    (5.5, 3.9578139676187162939),
    (5.937649713437746, 4.6814686011724202644),
    (7.25, 7.0521854507385394449),
    (7.302348225469863, 7.1523964022624865988),
    (8.980706538707127, 10.563324406975146914),
    (9.75, 12.242204940050762559),
    (11.044815646159819, 15.209903317528334085),
    (12.5, 18.734347511936445702),
    (13.583335802354174, 21.474115204338119267),
    (16.70530477198758, 29.848324771457012092),
    (17.3, 31.515624178175291864),
    (20.54482135946495, 40.965828610425601026),
    (23.9, 51.291181019320067098),
    (25.266805392267468, 55.6396184621240585),
    (31.074081568326793, 74.91152010692949747),
    (31.4, 76.027956262368844278),
    (38.21609144187789, 100.11442929242888929),
    (44.4, 123.0440280866864662),
    (46.99960775615009, 132.95106902815602783),
    (55.5, 166.32150615984036914),
    (57.80191133861852, 175.59357484781391761),
    (66.6, 211.85456235086662664),
    (71.08699654967492, 230.80932157119811378),
    (77.7, 259.26043689759798506),
    (87.42550136187712, 302.11979335529999417),
    (88.8, 308.26781816251065779),
    (99.9, 358.67423945197756376),
    (107.51921813203305, 394.00103925171755932),
    (123.456, 469.6055471299294835),
    (132.23123788415288, 512.13643763513286836),
    (150.5, 602.51395487058541195),
    (162.6230228990673, 663.73522538540310883),
    (175.25, 728.46522769745683522),
    (199.99, 857.88071192365551519),
    (200.0, 857.93366982585743682),
];

