/** Wire types of the experiment HTTP API consumed by this page.
 *
 * Only the participant-facing endpoints are typed here. The
 * experimenter-facing summary endpoint is deliberately not consumed:
 * its payload names the two ranking sides, and the assets delivered to
 * participants must stay blind to them.
 */

/** One row of an interleaved session, exactly as delivered by the API. */
export interface SessionItem {
  userref: string;
  display_rank: number;
}

/** Response of POST /api/sessions. */
export interface SessionPayload {
  session_id: string;
  n: number;
  items: SessionItem[];
}
